#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "robinsim/blocks.hpp"
#include "robinsim/criteria.hpp"
#include "robinsim/quadrature.hpp"
#include "robinsim/serialize.hpp"
#include "robinsim/sim.hpp"

namespace robinsim {

inline constexpr const char* kVersion = "robinsim 1.0.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNegative = 3, kExitInconclusive = 4, kExitNumeric = 5 };

inline int exit_code(Verdict v) {
    switch (v) {
        case Verdict::ACTIVE:
        case Verdict::NON_TRAP: return kExitOk;
        case Verdict::NEARLY_INACTIVE:
        case Verdict::TRAP: return kExitNegative;
        case Verdict::INCONCLUSIVE: return kExitInconclusive;
    }
    return kExitInconclusive;
}

// --- result store ------------------------------------------------------------------

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

struct ExperimentRecord {
    std::string id;
    std::string timestamp;
    std::string command;
    json result;
    std::string version = kVersion;

    friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

inline std::string experiment_id(const std::string& command, const json& domain, const json& config,
                                 std::uint64_t seed) {
    return hex64(fnv1a(command + '\n' + domain.dump() + '\n' + config.dump() + '\n' + std::to_string(seed)));
}

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json record_json(const ExperimentRecord& r) {
    return {{"id", r.id}, {"timestamp", r.timestamp}, {"command", r.command}, {"result", r.result}, {"version", r.version}};
}

inline ExperimentRecord record_from(const json& j) {
    return {j.at("id").get<std::string>(), j.at("timestamp").get<std::string>(), j.at("command").get<std::string>(),
            j.at("result"), j.at("version").get<std::string>()};
}

inline void append_record(const std::string& path, const ExperimentRecord& r) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw InvalidParameter("cannot open store '" + path + "'");
    f << record_json(r).dump() << '\n';
}

inline std::vector<ExperimentRecord> read_store(const std::string& path) {
    std::ifstream f(path);
    std::vector<ExperimentRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty()) out.push_back(record_from(json::parse(line)));
    }
    return out;
}

// --- experiment helpers ------------------------------------------------------------

/// Volume of {lo < x1 < hi} inside the domain, for the families with a closed form or a 1D
/// integral.
inline double slab_volume(const DomainSpec& spec, double lo, double hi) {
    if (!(hi > lo)) throw ContractViolation("slab needs lo < hi");
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) {
                return CuspGeometry(v.d, v.alpha).volume(std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0));
            } else if constexpr (std::is_same_v<T, UnitBox>) {
                return std::clamp(hi, 0.0, 1.0) - std::clamp(lo, 0.0, 1.0);
            } else if constexpr (std::is_same_v<T, Disk>) {
                const double a = std::clamp(lo, -v.R, v.R), b = std::clamp(hi, -v.R, v.R);
                if (!(b > a)) return 0.0;
                const double vb = unit_ball_volume(v.d - 1);
                return integrate([&](double x) { return vb * std::pow(std::max(0.0, v.R * v.R - x * x), 0.5 * (v.d - 1)); },
                                 a, b);
            } else {
                throw UnsupportedFamily("slab volumes are available for cusp, box and disk only");
            }
        },
        spec.family);
}

/// Cells [edges[i], edges[i+1]] x R^{d-1}.
inline std::vector<GreenCell> slab_cells(const DomainSpec& spec, const std::vector<double>& edges) {
    if (edges.size() < 2) throw InvalidParameter("need at least two slab edges");
    const auto d = static_cast<std::size_t>(spec.dim());
    std::vector<GreenCell> cells;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        GreenCell c;
        c.box.lo = Point(d);
        c.box.hi = Point(d);
        for (std::size_t k = 0; k < d; ++k) {
            c.box.lo[k] = -1e300;
            c.box.hi[k] = 1e300;
        }
        c.box.lo[0] = edges[i];
        c.box.hi[0] = edges[i + 1];
        c.volume = slab_volume(spec, edges[i], edges[i + 1]);
        cells.push_back(c);
    }
    return cells;
}

struct GreenRow {
    std::int64_t n = 0;
    double position = 0.0;
    double density = 0.0;
    double resistance = 0.0;  // sum_{k<=n} r_k^{2-d}
    double ratio = 0.0;
    std::int64_t visits = 0;
};

struct GreenReport {
    std::vector<GreenRow> rows;
    double spread = 0.0;  // max / min ratio over rows
    Point x0;
    EstimateCI exit_time;
};

/// Occupation density in a slab of width r_n centred on each cut n = n_from..n_to, started on
/// the axis at cut x0_cut, against the resistance series up to n.
inline GreenReport green_report(const DomainSpec& spec, std::int64_t n_from, std::int64_t n_to, std::int64_t x0_cut,
                                const SimConfig& cfg) {
    if (!spec.is<Cusp>()) throw UnsupportedFamily("green-report runs on the cusp family");
    const int d = spec.dim();
    if (d < 3) throw UnsupportedDimension("green-report needs d >= 3");
    if (n_from < 1 || n_to < n_from || x0_cut <= n_to + 1) throw InvalidParameter("need 1 <= n-from <= n-to < x0-cut - 1");
    DecomposeOptions opt;
    opt.n_max = std::max<std::int64_t>(x0_cut + 2, 64);
    const BlockDecomposition dec = decompose(spec, opt);
    if (x0_cut > static_cast<std::int64_t>(dec.gammas.size())) throw InvalidParameter("x0-cut beyond the decomposition");
    std::vector<GreenCell> cells;
    for (std::int64_t n = n_from; n <= n_to; ++n) {
        const double p = dec.gamma(n).position;
        const double half = 0.5 * dec.block(n).r;
        auto c = slab_cells(spec, {p - half, p + half});
        cells.push_back(c.front());
    }
    // Cells may overlap for adjacent n; estimate each separately in that case.
    Point x0 = Point::zeros(static_cast<std::size_t>(d));
    x0[0] = dec.gamma(x0_cut).position;
    GreenReport rep;
    rep.x0 = x0;
    std::vector<double> density(cells.size());
    std::vector<std::int64_t> visits(cells.size());
    for (std::size_t parity = 0; parity < 2; ++parity) {
        std::vector<GreenCell> part;
        std::vector<std::size_t> idx;
        for (std::size_t i = parity; i < cells.size(); i += 2) {
            part.push_back(cells[i]);
            idx.push_back(i);
        }
        if (part.empty()) continue;
        const GreenEstimate g = estimate_green(spec, x0, part, cfg);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            density[idx[k]] = g.density[k];
            visits[idx[k]] = g.visits[k];
        }
        if (parity == 0) rep.exit_time = g.exit_time;
    }
    double lo = kInf, hi = 0.0;
    for (std::int64_t n = n_from; n <= n_to; ++n) {
        const auto i = static_cast<std::size_t>(n - n_from);
        GreenRow row;
        row.n = n;
        row.position = dec.gamma(n).position;
        row.density = density[i];
        row.visits = visits[i];
        row.resistance = resistance_series(dec, 1, n, d);
        row.ratio = row.density / row.resistance;
        lo = std::min(lo, row.ratio);
        hi = std::max(hi, row.ratio);
        rep.rows.push_back(row);
    }
    rep.spread = lo > 0.0 ? hi / lo : kInf;
    return rep;
}

inline json green_report_json(const GreenReport& r) {
    json rows = json::array();
    for (const auto& g : r.rows)
        rows.push_back({{"n", g.n},
                        {"position", num(g.position)},
                        {"density", num(g.density)},
                        {"resistance_series", num(g.resistance)},
                        {"ratio", num(g.ratio)},
                        {"visits", g.visits}});
    return {{"rows", rows}, {"spread", num(r.spread)}, {"x0", point_json(r.x0)}, {"exit_time", estimate_json(r.exit_time)}};
}

// --- command line ------------------------------------------------------------------

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw InvalidParameter("bad number '" + item + "'");
        }
        if (used != item.size()) throw InvalidParameter("bad number '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw InvalidParameter("empty list");
    return out;
}

inline Point parse_point(const std::string& s) {
    const auto v = parse_list(s);
    if (v.size() > kMaxDim) throw InvalidParameter("too many coordinates");
    return Point(std::span<const double>(v));
}

inline std::vector<Point> parse_points(const std::string& s) {
    std::vector<Point> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (!item.empty()) out.push_back(parse_point(item));
    }
    return out;
}

struct CliOptions {
    std::string family;
    int d = 2;
    double alpha = 1.5, beta = 2.0, rho = 0.2, R = 1.0;
    int depth = -1;
    std::string bstar_c;
    double bstar_r = -1.0;
    std::string x0;
    std::int64_t paths = 1000;
    std::uint64_t seed = 0;
    double dt_max = 1e-3, dt_min = 1e-12, kappa = 1.0, max_time = 100.0, robin_c = 1.0, wall_layer = kInf;
    std::int64_t max_steps = 100'000'000;
    int threads = 0;
    std::string out = "json";
    std::string store;
    // classify
    std::string criterion = "activity";
    std::int64_t n_max = DecomposeOptions{}.n_max;
    bool terms = false;
    // simulate
    std::string mode;
    std::string probes, slabs, labels = "halves", slab;
    std::int64_t cut_a = 0, cut_b = 0;
    double sphere_a = -1.0, sphere_b = -1.0, eps = 1e-6;
    // sweep
    std::string param;
    double from = 0.0, to = 0.0, step = 0.0;
    // green-report
    std::int64_t n_from = 3, n_to = 7, x0_cut = 12;
};

inline DomainSpec build_spec(const CliOptions& o, int default_depth) {
    const int depth = o.depth > 0 ? o.depth : default_depth;
    Family f;
    if (o.family == "cusp") f = Cusp{o.d, o.alpha};
    else if (o.family == "channels2d") f = FractalChannels2D{o.alpha, o.beta, depth};
    else if (o.family == "channelsNd") f = FractalChannelsND{o.d, o.alpha, o.beta, depth};
    else if (o.family == "snowflake") f = SnowflakeCubes{o.d, o.rho, o.beta, depth};
    else if (o.family == "box") f = UnitBox{o.d};
    else if (o.family == "disk") f = Disk{o.d, o.R};
    else throw InvalidParameter("unknown family '" + o.family + "'");
    validate_parameters(f);
    DomainSpec spec = make_spec(f);
    if (!o.bstar_c.empty()) spec.bstar.center = parse_point(o.bstar_c);
    if (o.bstar_r > 0.0) spec.bstar.radius = o.bstar_r;
    validate(spec);
    return spec;
}

inline SimConfig build_config(const CliOptions& o) {
    SimConfig c;
    c.dt_max = o.dt_max;
    c.dt_min = o.dt_min;
    c.kappa = o.kappa;
    c.n_paths = o.paths;
    c.seed = o.seed;
    c.robin_c = o.robin_c;
    c.max_time = o.max_time;
    c.max_steps = o.max_steps;
    c.wall_layer = o.wall_layer;
    c.threads = o.threads;
    validate_config(c);
    return c;
}

inline void add_domain_flags(CLI::App* app, CliOptions& o) {
    app->add_option("--family", o.family, "cusp | channels2d | channelsNd | snowflake | box | disk")->required();
    app->add_option("--d", o.d, "dimension");
    app->add_option("--alpha", o.alpha);
    app->add_option("--beta", o.beta);
    app->add_option("--rho", o.rho);
    app->add_option("--depth", o.depth, "tree depth / number of bands");
    app->add_option("--R", o.R, "disk radius");
    app->add_option("--bstar-c", o.bstar_c, "reference ball centre, comma list");
    app->add_option("--bstar-r", o.bstar_r, "reference ball radius");
    app->add_option("--out", o.out, "json | csv");
    app->add_option("--store", o.store, "append-only JSON-lines result store");
}

inline void add_sim_flags(CLI::App* app, CliOptions& o) {
    app->add_option("--x0", o.x0, "start point, comma list");
    app->add_option("--paths", o.paths);
    app->add_option("--seed", o.seed);
    app->add_option("--dt-max", o.dt_max);
    app->add_option("--dt-min", o.dt_min);
    app->add_option("--kappa", o.kappa);
    app->add_option("--max-time", o.max_time);
    app->add_option("--max-steps", o.max_steps);
    app->add_option("--robin-c", o.robin_c);
    app->add_option("--wall-layer", o.wall_layer, "clearance below which steps stop shrinking");
    app->add_option("--threads", o.threads, "worker threads (default ROBINSIM_THREADS or all cores)");
}

inline std::string store_path(const CliOptions& o) {
    if (!o.store.empty()) return o.store;
    if (const char* env = std::getenv("ROBINSIM_STORE")) return env;
    return {};
}

inline void maybe_store(const CliOptions& o, const std::string& command, const DomainSpec& spec,
                        const SimConfig& cfg, const json& result) {
    const std::string path = store_path(o);
    if (path.empty()) return;
    ExperimentRecord r;
    r.command = command;
    r.id = experiment_id(command, domain_json(spec), config_json(cfg), cfg.seed);
    r.timestamp = utc_timestamp();
    r.result = result;
    append_record(path, r);
}

inline int classify_verdict(const CliOptions& o, const DomainSpec& spec, ClassifyResult& res) {
    DecomposeOptions dopt;
    dopt.n_max = o.n_max;
    if (o.depth > 0) dopt.max_bands = o.depth;
    if (o.criterion == "activity") res = classify_activity(spec, dopt);
    else if (o.criterion == "trap") res = classify_trap(spec, dopt);
    else throw InvalidParameter("criterion must be activity or trap");
    return exit_code(res.verdict);
}

inline int cmd_classify(const CliOptions& o, std::ostream& out) {
    const DomainSpec spec = build_spec(o, 20);
    ClassifyResult res;
    const int code = classify_verdict(o, spec, res);
    if (o.out == "csv") {
        for (const auto& r : res.reports) out << "# " << to_string(r.id) << '\n' << report_csv(r);
        return code;
    }
    json j = classify_json(res, o.terms);
    j["command"] = "classify";
    j["criterion"] = o.criterion;
    j["domain"] = domain_json(spec);
    out << j.dump(2) << '\n';
    return code;
}

inline std::function<int(const Point&)> make_labeler(const std::string& kind, const DomainSpec& spec, int& n_labels) {
    const int d = spec.dim();
    if (kind == "halves") {
        n_labels = 2;
        return [](const Point& p) { return p[1] >= 0.0 ? 0 : 1; };
    }
    if (kind == "faces") {
        // Nearest face of the bounding box [lo, hi]^d of the domain.
        double lo = 0.0, hi = 1.0;
        if (const auto* disk = std::get_if<Disk>(&spec.family)) lo = -disk->R, hi = disk->R;
        n_labels = 2 * d;
        return [=](const Point& p) {
            int best = 0;
            double bd = kInf;
            for (int k = 0; k < d; ++k) {
                const double a = p[static_cast<std::size_t>(k)] - lo, b = hi - p[static_cast<std::size_t>(k)];
                if (a < bd) bd = a, best = 2 * k;
                if (b < bd) bd = b, best = 2 * k + 1;
            }
            return best;
        };
    }
    throw InvalidParameter("labels must be halves or faces");
}

inline json run_simulation(const CliOptions& o, const DomainSpec& spec, const SimConfig& cfg) {
    json j;
    const auto need_x0 = [&] {
        if (o.x0.empty()) throw InvalidParameter("--x0 is required for this mode");
        return parse_point(o.x0);
    };
    if (o.mode == "u") {
        j = estimate_json(estimate_u(spec, need_x0(), cfg));
        j["estimand"] = "u";
    } else if (o.mode == "exit") {
        j = estimate_json(estimate_mean_exit(spec, need_x0(), cfg));
        j["estimand"] = "exit_time";
    } else if (o.mode == "local-time") {
        const auto probes = o.probes.empty() ? std::vector<Point>{need_x0()} : parse_points(o.probes);
        json arr = json::array();
        for (const auto& p : local_time_profile(spec, probes, cfg))
            arr.push_back({{"probe", point_json(p.probe)}, {"q25", num(p.q25)}, {"q50", num(p.q50)}, {"q75", num(p.q75)},
                           {"u", estimate_json(p.u)}, {"truncated_fraction", num(p.truncated_fraction)}});
        j["estimand"] = "local_time";
        j["probes"] = arr;
    } else if (o.mode == "green") {
        if (o.slabs.empty()) throw InvalidParameter("--slabs is required for green mode");
        const auto cells = slab_cells(spec, parse_list(o.slabs));
        const GreenEstimate g = estimate_green(spec, need_x0(), cells, cfg);
        json arr = json::array();
        for (std::size_t i = 0; i < cells.size(); ++i)
            arr.push_back({{"lo", num(cells[i].box.lo[0])}, {"hi", num(cells[i].box.hi[0])}, {"volume", num(cells[i].volume)},
                           {"density", num(g.density[i])}, {"mean_time", num(g.mean_time[i])}, {"visits", g.visits[i]},
                           {"zero_visits", g.visits[i] == 0}});
        j["estimand"] = "green";
        j["cells"] = arr;
        j["outside_time"] = num(g.outside_time);
        j["exit_time"] = estimate_json(g.exit_time);
    } else if (o.mode == "hitprob") {
        Cut a, b;
        if (o.sphere_a > 0.0 && o.sphere_b > 0.0) {
            a.kind = b.kind = CutKind::Cap;
            a.center = b.center = spec.bstar.center;
            a.side = b.side = +1;
            a.radius = o.sphere_a;
            b.radius = o.sphere_b;
        } else if (o.cut_a > 0 && o.cut_b > 0) {
            DecomposeOptions dopt;
            dopt.n_max = std::max<std::int64_t>({o.cut_a, o.cut_b, 64}) + 2;
            const BlockDecomposition dec = decompose(spec, dopt);
            a = dec.gamma(o.cut_a);
            b = dec.gamma(o.cut_b);
        } else {
            throw InvalidParameter("hitprob needs --cut-a/--cut-b or --sphere-a/--sphere-b");
        }
        j = estimate_json(estimate_hitting_prob(spec, need_x0(), a, b, cfg));
        j["estimand"] = "hitting_probability";
    } else if (o.mode == "harmonic") {
        int n_labels = 0;
        const auto label = make_labeler(o.labels, spec, n_labels);
        double lo = -kInf, hi = kInf;
        if (!o.slab.empty()) {
            const auto s = parse_list(o.slab);
            if (s.size() != 2) throw InvalidParameter("--slab takes lo,hi");
            lo = s[0];
            hi = s[1];
        }
        const HarmonicEstimate h = harmonic_measure(spec, need_x0(), label, n_labels, cfg, lo, hi, o.eps);
        json arr = json::array();
        for (const auto& e : h.probability) arr.push_back(estimate_json(e));
        j["estimand"] = "harmonic_measure";
        j["labels"] = o.labels;
        j["probabilities"] = arr;
        j["truncated_fraction"] = num(h.truncated_fraction);
        j["total"] = num(h.total);
    } else {
        throw InvalidParameter("mode must be u, exit, local-time, green, hitprob or harmonic");
    }
    j["config"] = config_json(cfg);
    j["domain"] = domain_json(spec);
    return j;
}

inline int cmd_simulate(const CliOptions& o, std::ostream& out) {
    const DomainSpec spec = build_spec(o, 8);
    require_simulatable(spec);
    const SimConfig cfg = build_config(o);
    const json j = run_simulation(o, spec, cfg);
    maybe_store(o, "simulate " + o.mode, spec, cfg, j);
    if (o.out == "csv" && j.contains("probes")) {
        out << "probe,q25,q50,q75\n";
        for (const auto& p : j["probes"]) {
            std::string coords;
            for (const auto& c : p["probe"]) coords += (coords.empty() ? "" : " ") + c.dump();
            out << coords << ',' << p["q25"].dump() << ',' << p["q50"].dump() << ',' << p["q75"].dump() << '\n';
        }
    } else {
        out << j.dump(2) << '\n';
    }
    return kExitOk;
}

inline void set_param(CliOptions& o, const std::string& name, double v) {
    if (name == "alpha") o.alpha = v;
    else if (name == "beta") o.beta = v;
    else if (name == "rho") o.rho = v;
    else if (name == "R") o.R = v;
    else if (name == "d") o.d = static_cast<int>(std::lround(v));
    else if (name == "depth") o.depth = static_cast<int>(std::lround(v));
    else if (name == "robin-c") o.robin_c = v;
    else if (name == "kappa") o.kappa = v;
    else if (name == "dt-max") o.dt_max = v;
    else throw InvalidParameter("cannot sweep '" + name + "'");
}

/// Number of sweep rows: floor((to - from) / step) + 1, with a little slack for rounding.
inline std::int64_t sweep_count(double from, double to, double step) {
    if (!(step > 0.0) || !(to >= from)) throw InvalidParameter("empty sweep range");
    return static_cast<std::int64_t>(std::floor((to - from) / step + 1e-9)) + 1;
}

inline int cmd_sweep(const CliOptions& base, std::ostream& out) {
    const std::int64_t n = sweep_count(base.from, base.to, base.step);
    const bool simulate = !base.mode.empty();
    CliOptions check = base;
    set_param(check, base.param, base.from);  // unknown parameter names are a usage error
    out << (simulate ? "value,mean,stderr,n,truncated_fraction\n" : "value,verdict,last_partial_sum,log_slope\n");
    for (std::int64_t i = 0; i < n; ++i) {
        // Round to 12 significant digits so 1.1 + 9 * 0.1 prints as 2.
        const double raw = base.from + static_cast<double>(i) * base.step;
        const double v = std::stod((std::ostringstream() << std::setprecision(12) << raw).str());
        CliOptions o = base;
        set_param(o, base.param, v);
        out << json(v).dump() << ',';
        try {
            if (simulate) {
                const DomainSpec spec = build_spec(o, 8);
                require_simulatable(spec);
                const json j = run_simulation(o, spec, build_config(o));
                out << j["mean"].dump() << ',' << j["stderr"].dump() << ',' << j["n"].dump() << ','
                    << j["truncated_fraction"].dump() << '\n';
            } else {
                const DomainSpec spec = build_spec(o, 20);
                ClassifyResult res;
                classify_verdict(o, spec, res);
                const CriterionReport* r = res.reports.empty() ? nullptr : &res.reports.front();
                out << to_string(res.verdict) << ','
                    << (r && !r->partial_sums.empty() ? json(r->partial_sums.back()).dump() : "") << ','
                    << (r ? num(r->log_slope).dump() : "") << '\n';
            }
        } catch (const std::invalid_argument& e) {
            out << (simulate ? "INVALID,,," : "INVALID,,") << '\n';
        }
    }
    return kExitOk;
}

inline int cmd_green_report(const CliOptions& o, std::ostream& out) {
    const DomainSpec spec = build_spec(o, 8);
    const SimConfig cfg = build_config(o);
    const GreenReport r = green_report(spec, o.n_from, o.n_to, o.x0_cut, cfg);
    json j = green_report_json(r);
    j["config"] = config_json(cfg);
    j["domain"] = domain_json(spec);
    maybe_store(o, "green-report", spec, cfg, j);
    out << j.dump(2) << '\n';
    return kExitOk;
}

/// Full command-line entry point; args[0] is the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robin activity and trap analysis for fractal domains", "robinsim"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    CliOptions o;

    auto* classify = app.add_subcommand("classify", "evaluate the series criteria");
    add_domain_flags(classify, o);
    classify->add_option("--criterion", o.criterion, "activity | trap");
    classify->add_option("--n-max", o.n_max, "block budget");
    classify->add_flag("--terms", o.terms, "include per-block terms and partial sums");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates");
    add_domain_flags(simulate, o);
    add_sim_flags(simulate, o);
    simulate->add_option("--mode", o.mode, "u | exit | local-time | green | hitprob | harmonic")->required();
    simulate->add_option("--probes", o.probes, "local-time probes, ';'-separated points");
    simulate->add_option("--slabs", o.slabs, "green cell edges along x1, comma list");
    simulate->add_option("--cut-a", o.cut_a, "hitprob target cut index");
    simulate->add_option("--cut-b", o.cut_b, "hitprob competing cut index");
    simulate->add_option("--sphere-a", o.sphere_a, "hitprob target sphere radius about the B* centre");
    simulate->add_option("--sphere-b", o.sphere_b, "hitprob competing sphere radius");
    simulate->add_option("--labels", o.labels, "harmonic labels: halves | faces");
    simulate->add_option("--slab", o.slab, "harmonic region restricted to lo < x1 < hi");
    simulate->add_option("--eps", o.eps, "walk-on-spheres stopping distance");

    auto* sweep = app.add_subcommand("sweep", "parameter sweep, CSV rows");
    add_domain_flags(sweep, o);
    add_sim_flags(sweep, o);
    sweep->add_option("--param", o.param)->required();
    sweep->add_option("--from", o.from)->required();
    sweep->add_option("--to", o.to)->required();
    sweep->add_option("--step", o.step)->required();
    sweep->add_option("--criterion", o.criterion);
    sweep->add_option("--n-max", o.n_max);
    sweep->add_option("--mode", o.mode, "simulate instead of classify");

    auto* green = app.add_subcommand("green-report", "occupation density against the resistance series");
    add_domain_flags(green, o);
    add_sim_flags(green, o);
    green->add_option("--n-from", o.n_from);
    green->add_option("--n-to", o.n_to);
    green->add_option("--x0-cut", o.x0_cut, "start on the axis at this cut");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        if (o.out != "json" && o.out != "csv") throw InvalidParameter("--out must be json or csv");
        if (classify->parsed()) return cmd_classify(o, out);
        if (simulate->parsed()) return cmd_simulate(o, out);
        if (sweep->parsed()) return cmd_sweep(o, out);
        return cmd_green_report(o, out);
    } catch (const UnsupportedFamily& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericFailure& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const QuadratureError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::logic_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace robinsim
