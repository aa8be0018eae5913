#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "robinsim/harness.hpp"

using namespace robinsim;

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "robinsim");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string f; std::getline(in, f, sep);) out.push_back(f);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string temp_path(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / (name + "_" + std::to_string(::getpid()));
    std::filesystem::remove(p);
    return p.string();
}

std::string run_process(const std::string& cmd) {
    std::string out;
    FILE* f = ::popen(cmd.c_str(), "r");
    if (!f) return out;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) out.append(buf, n);
    ::pclose(f);
    return out;
}

}  // namespace

TEST(ExitCodes, TotalOverVerdicts) {
    EXPECT_EQ(exit_code(Verdict::ACTIVE), 0);
    EXPECT_EQ(exit_code(Verdict::NON_TRAP), 0);
    EXPECT_EQ(exit_code(Verdict::NEARLY_INACTIVE), 3);
    EXPECT_EQ(exit_code(Verdict::TRAP), 3);
    EXPECT_EQ(exit_code(Verdict::INCONCLUSIVE), 4);
}

TEST(Store, RecordsRoundTrip) {
    const json domain = {{"family", "cusp"}}, config = {{"paths", 10}};
    ExperimentRecord r{experiment_id("simulate u", domain, config, 7), utc_timestamp(), "simulate u",
                       json{{"mean", 0.1 + 0.2}, {"n", 10}}};
    EXPECT_EQ(record_from(json::parse(record_json(r).dump())), r);
    EXPECT_EQ(r.id, experiment_id("simulate u", domain, config, 7));
    EXPECT_NE(r.id, experiment_id("simulate u", domain, config, 8));
    EXPECT_EQ(r.id.size(), 16u);

    const auto path = temp_path("robinsim_store");
    append_record(path, r);
    append_record(path, r);
    const auto back = read_store(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], r);
    EXPECT_EQ(back[1], r);
    std::filesystem::remove(path);
}

TEST(Store, CliAppendsWhatItPrints) {
    const auto path = temp_path("robinsim_cli_store");
    const auto a = cli({"simulate", "--mode", "u", "--family", "box", "--d", "2", "--x0", "0.05,0.05", "--paths",
                        "300", "--seed", "7", "--store", path});
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = cli({"simulate", "--mode", "u", "--family", "box", "--d", "2", "--x0", "0.05,0.05", "--paths",
                        "300", "--seed", "7", "--store", path});
    const auto recs = read_store(path);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].result, json::parse(a.out));
    EXPECT_EQ(recs[0].id, recs[1].id);
    EXPECT_EQ(recs[0].result.dump(), recs[1].result.dump());
    EXPECT_EQ(recs[0].version, kVersion);
    std::filesystem::remove(path);
}

TEST(Numbers, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 2.0 / 3.0, 1e-300, 0.9175443906}) EXPECT_EQ(json::parse(json(v).dump()).get<double>(), v);
}

TEST(Parsing, ListsAndPoints) {
    EXPECT_EQ(parse_list("0.5, 0.25"), (std::vector<double>{0.5, 0.25}));
    EXPECT_EQ(parse_points("0.1,0;0.2,0").size(), 2u);
    EXPECT_THROW(parse_list("0.5,x"), InvalidParameter);
}

TEST(Sweep, RowCountFormula) {
    EXPECT_EQ(sweep_count(1.1, 3.0, 0.1), 20);
    EXPECT_EQ(sweep_count(1.0, 1.0, 0.1), 1);
    EXPECT_EQ(sweep_count(0.0, 1.0, 0.3), 4);
    EXPECT_THROW(sweep_count(2.0, 1.0, 0.1), InvalidParameter);
    EXPECT_THROW(sweep_count(1.0, 2.0, 0.0), InvalidParameter);
}

TEST(Sweep, CuspActivityFlipsOnceAtTwo) {
    const auto r = cli({"sweep", "--family", "cusp", "--d", "2", "--param", "alpha", "--from", "1.1", "--to", "3.0",
                        "--step", "0.1", "--criterion", "activity"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines(r.out);
    ASSERT_EQ(rows.size(), 21u);
    EXPECT_EQ(rows[0], "value,verdict,last_partial_sum,log_slope");
    int flips = 0;
    std::string prev;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split(rows[i], ',');
        ASSERT_EQ(f.size(), 4u) << rows[i];
        EXPECT_EQ(std::stod(f[0]), std::stod((std::ostringstream() << std::setprecision(12) << 1.1 + 0.1 * (i - 1)).str()));
        if (i > 1 && f[1] != prev) {
            ++flips;
            EXPECT_EQ(f[0], "2.0");
        }
        prev = f[1];
    }
    EXPECT_EQ(flips, 1);
}

TEST(Sweep, SnowflakeTrapFlipsAtThree) {
    const auto r = cli({"sweep", "--family", "snowflake", "--d", "3", "--rho", "0.2", "--param", "beta", "--from",
                        "2.0", "--to", "4.0", "--step", "0.25", "--criterion", "trap"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines(r.out);
    ASSERT_EQ(rows.size(), 10u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split(rows[i], ',');
        EXPECT_EQ(f[1], std::stod(f[0]) < 3.0 ? "NON_TRAP" : "TRAP") << rows[i];
    }
}

TEST(Sweep, SingleValueAndErrors) {
    const auto one = cli({"sweep", "--family", "cusp", "--d", "2", "--param", "alpha", "--from", "1.5", "--to", "1.5",
                          "--step", "0.1"});
    EXPECT_EQ(one.code, 0);
    EXPECT_EQ(lines(one.out).size(), 2u);
    EXPECT_EQ(cli({"sweep", "--family", "cusp", "--param", "alpha", "--from", "2", "--to", "1", "--step", "0.1"}).code, 2);
    EXPECT_EQ(cli({"sweep", "--family", "cusp", "--param", "gamma", "--from", "1", "--to", "2", "--step", "0.1"}).code, 2);
    const auto invalid = cli({"sweep", "--family", "cusp", "--d", "2", "--param", "alpha", "--from", "0.5", "--to",
                              "1.5", "--step", "0.5"});
    EXPECT_EQ(invalid.code, 0);
    const auto rows = lines(invalid.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(split(rows[1], ',')[1], "INVALID");
    EXPECT_EQ(split(rows[2], ',')[1], "INVALID");
    EXPECT_EQ(split(rows[3], ',')[1], "ACTIVE");
}

TEST(Classify, CommandExamples) {
    const auto a = cli({"classify", "--family", "cusp", "--d", "2", "--alpha", "1.5", "--criterion", "activity"});
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(json::parse(a.out).at("verdict"), "ACTIVE");
    const auto t = cli({"classify", "--family", "snowflake", "--d", "3", "--rho", "0.2", "--beta", "3.5", "--criterion",
                        "trap"});
    EXPECT_EQ(t.code, 3);
    EXPECT_EQ(json::parse(t.out).at("verdict"), "TRAP");
    const auto bad = cli({"classify", "--family", "cusp", "--d", "2", "--alpha", "0.5", "--criterion", "activity"});
    EXPECT_EQ(bad.code, 2);
    EXPECT_FALSE(bad.err.empty());
    EXPECT_EQ(cli({"classify", "--family", "cusp", "--d", "2", "--criterion", "trap"}).code, 2);
    EXPECT_EQ(cli({"classify", "--family", "teapot"}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"--version"}).out, std::string(kVersion) + "\n");
}

TEST(Classify, CsvListsTerms) {
    const auto r = cli({"classify", "--family", "cusp", "--d", "2", "--alpha", "1.5", "--n-max", "50", "--out", "csv"});
    EXPECT_EQ(r.code, 0);
    EXPECT_GT(lines(r.out).size(), 10u);
}

TEST(Simulate, CommandExamples) {
    const auto u = cli({"simulate", "--mode", "u", "--family", "box", "--d", "2", "--x0", "0.05,0.05", "--paths",
                        "2000", "--seed", "7"});
    ASSERT_EQ(u.code, 0) << u.err;
    const double mean = json::parse(u.out).at("mean").get<double>();
    EXPECT_GT(mean, 0.0);
    EXPECT_LE(mean, 1.0);

    const auto e = cli({"simulate", "--mode", "exit", "--family", "disk", "--d", "2", "--R", "1", "--bstar-r", "0.25",
                        "--x0", "1,0", "--paths", "2000", "--seed", "3", "--kappa", "0.1", "--wall-layer", "0.01"});
    ASSERT_EQ(e.code, 0) << e.err;
    const json j = json::parse(e.out);
    const double exact = (0.0625 - 1.0) / 2.0 + std::log(1.0 / 0.25);
    EXPECT_NEAR(exact, 0.917544, 1e-6);
    EXPECT_NEAR(j.at("mean").get<double>(), exact, 4.0 * j.at("stderr").get<double>() + 0.05 * exact);

    const auto s = cli({"simulate", "--mode", "u", "--family", "snowflake", "--d", "3", "--x0", "0.5,0,0"});
    EXPECT_EQ(s.code, 2);
    EXPECT_NE(s.err.find("criterion-only family"), std::string::npos);
    EXPECT_EQ(cli({"simulate", "--mode", "teleport", "--family", "box", "--d", "2", "--x0", "0.5,0.1"}).code, 2);
    EXPECT_EQ(cli({"simulate", "--mode", "u", "--family", "box", "--d", "2", "--x0", "0.5,0.1", "--paths", "0"}).code, 2);
}

TEST(Simulate, HarmonicAndHittingModes) {
    const auto h = cli({"simulate", "--mode", "harmonic", "--family", "box", "--d", "2", "--x0", "0.5,0.5", "--labels",
                        "faces", "--paths", "4000"});
    ASSERT_EQ(h.code, 0) << h.err;
    const json j = json::parse(h.out);
    ASSERT_EQ(j.at("probabilities").size(), 4u);
    EXPECT_NEAR(j.at("total").get<double>(), 1.0, 1e-12);
    const auto p = cli({"simulate", "--mode", "hitprob", "--family", "disk", "--d", "3", "--x0", "0.3,0,0",
                        "--sphere-a", "0.3", "--sphere-b", "0.8", "--paths", "10"});
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(json::parse(p.out).at("mean").get<double>(), 1.0);
}

TEST(Determinism, WorkerFlagDoesNotChangeOutput) {
    const std::vector<std::string> base{"simulate", "--mode", "u", "--family", "disk", "--d", "2", "--x0", "1,0",
                                        "--paths", "600", "--seed", "11"};
    auto with = [&](const char* n) {
        auto a = base;
        a.insert(a.end(), {"--threads", n});
        return cli(a);
    };
    const auto one = with("1"), eight = with("8");
    ASSERT_EQ(one.code, 0);
    EXPECT_EQ(one.out, eight.out);
}

TEST(Determinism, ThreadEnvironmentDoesNotChangeProcessOutput) {
    const char* bin = std::getenv("ROBINSIM_CLI");
    if (!bin) GTEST_SKIP() << "ROBINSIM_CLI not set";
    const std::string args = " simulate --mode exit --family disk --d 2 --x0 1,0 --paths 600 --seed 5";
    const auto one = run_process("ROBINSIM_THREADS=1 " + std::string(bin) + args);
    const auto eight = run_process("ROBINSIM_THREADS=8 " + std::string(bin) + args);
    ASSERT_FALSE(one.empty());
    EXPECT_EQ(one, eight);
}
