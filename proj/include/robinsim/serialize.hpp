#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "robinsim/blocks.hpp"
#include "robinsim/criteria.hpp"
#include "robinsim/domain.hpp"
#include "robinsim/sim.hpp"
#include "robinsim/stats.hpp"

namespace robinsim {

using json = nlohmann::json;

/// Doubles are emitted in shortest round-trip form; non-finite values become the strings
/// "inf", "-inf" and "nan" so that they survive a parse.
inline json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

inline double num_from(const json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
}

inline json point_json(const Point& p) {
    json a = json::array();
    for (std::size_t i = 0; i < p.size(); ++i) a.push_back(num(p[i]));
    return a;
}

inline Point point_from(const json& j) {
    if (!j.is_array() || j.empty() || j.size() > kMaxDim) throw InvalidParameter("bad point");
    Point p(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) p[i] = num_from(j[i]);
    return p;
}

inline json domain_json(const DomainSpec& spec) {
    json j;
    j["family"] = family_name(spec.family);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) {
                j["d"] = v.d;
                j["alpha"] = v.alpha;
            } else if constexpr (std::is_same_v<T, FractalChannels2D>) {
                j["d"] = 2;
                j["alpha"] = v.alpha;
                j["beta"] = v.beta;
                j["depth"] = v.depth;
            } else if constexpr (std::is_same_v<T, FractalChannelsND>) {
                j["d"] = v.d;
                j["alpha"] = v.alpha;
                j["beta"] = v.beta;
                j["depth"] = v.depth;
            } else if constexpr (std::is_same_v<T, SnowflakeCubes>) {
                j["d"] = v.d;
                j["rho"] = v.rho;
                j["beta"] = v.beta;
                j["depth"] = v.depth;
            } else if constexpr (std::is_same_v<T, UnitBox>) {
                j["d"] = v.d;
            } else {
                j["d"] = v.d;
                j["R"] = v.R;
            }
        },
        spec.family);
    j["bstar"] = {{"center", point_json(spec.bstar.center)}, {"radius", num(spec.bstar.radius)}};
    return j;
}

inline DomainSpec domain_from_json(const json& j) {
    const auto fam = j.at("family").get<std::string>();
    const int d = j.at("d").get<int>();
    Family f;
    if (fam == "cusp") f = Cusp{d, j.at("alpha").get<double>()};
    else if (fam == "channels2d")
        f = FractalChannels2D{j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("depth").get<int>()};
    else if (fam == "channelsNd")
        f = FractalChannelsND{d, j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("depth").get<int>()};
    else if (fam == "snowflake")
        f = SnowflakeCubes{d, j.at("rho").get<double>(), j.at("beta").get<double>(), j.at("depth").get<int>()};
    else if (fam == "box") f = UnitBox{d};
    else if (fam == "disk") f = Disk{d, j.at("R").get<double>()};
    else throw InvalidParameter("unknown family '" + fam + "'");
    if (!j.contains("bstar")) return make_spec(f);
    const auto& b = j.at("bstar");
    return make_spec(f, BStar{point_from(b.at("center")), num_from(b.at("radius"))});
}

inline json estimate_json(const EstimateCI& e) {
    return {{"mean", num(e.mean)},
            {"stderr", num(e.std_err)},
            {"n", e.n},
            {"ci95", num(e.ci95)},
            {"truncated_fraction", num(e.truncated_fraction)},
            {"lower_bound_only", e.lower_bound_only},
            {"truncation_biased", e.truncation_biased}};
}

inline EstimateCI estimate_from(const json& j) {
    EstimateCI e;
    e.mean = num_from(j.at("mean"));
    e.std_err = num_from(j.at("stderr"));
    e.n = j.at("n").get<std::int64_t>();
    e.ci95 = num_from(j.at("ci95"));
    e.truncated_fraction = num_from(j.at("truncated_fraction"));
    e.lower_bound_only = j.at("lower_bound_only").get<bool>();
    e.truncation_biased = j.at("truncation_biased").get<bool>();
    return e;
}

/// Thread count is left out: it never changes results.
inline json config_json(const SimConfig& c) {
    return {{"dt_max", num(c.dt_max)},   {"dt_min", num(c.dt_min)},     {"kappa", num(c.kappa)},
            {"n_paths", c.n_paths},      {"seed", c.seed},              {"robin_c", num(c.robin_c)},
            {"max_time", num(c.max_time)}, {"max_steps", c.max_steps},
            {"wall_layer", num(c.wall_layer)}};
}

inline json cut_json(const Cut& c) {
    json j = {{"band", c.band}, {"position", num(c.position)}};
    switch (c.kind) {
        case CutKind::Hyperplane: j["kind"] = "hyperplane"; break;
        case CutKind::Cap: j["kind"] = "cap"; break;
        case CutKind::Disk: j["kind"] = "disk"; break;
    }
    if (c.kind == CutKind::Hyperplane || c.kind == CutKind::Disk) j["toward_anchor"] = c.toward_anchor;
    if (c.kind != CutKind::Hyperplane) {
        j["center"] = point_json(c.center);
        j["radius"] = num(c.radius);
    }
    if (c.kind == CutKind::Cap) j["side"] = c.side;
    return j;
}

inline json decomposition_json(const BlockDecomposition& dec) {
    json j;
    j["anchor"] = point_json(dec.anchor);
    j["d"] = dec.d;
    j["ratio_lo"] = num(dec.ratio_lo);
    j["ratio_hi"] = num(dec.ratio_hi);
    j["first_band"] = dec.first_band;
    j["last_band"] = dec.last_band;
    j["truncated"] = dec.truncated;
    j["gammas"] = json::array();
    for (const auto& c : dec.gammas) j["gammas"].push_back(cut_json(c));
    j["blocks"] = json::array();
    for (const auto& b : dec.blocks)
        j["blocks"].push_back({{"n", b.n}, {"r", num(b.r)}, {"area", num(b.area)}, {"volume", num(b.volume)}, {"band", b.band}});
    return j;
}

inline json vec_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

/// Per-block term and partial-sum arrays are large (one entry per block), so they are only
/// written when asked for.
inline json report_json(const CriterionReport& r, bool with_terms) {
    json j;
    j["criterion_id"] = to_string(r.id);
    if (with_terms) {
        j["terms"] = vec_json(r.terms);
        j["partial_sums"] = vec_json(r.partial_sums);
    }
    j["n_terms"] = r.terms.size();
    j["last_partial_sum"] = num(r.partial_sums.empty() ? 0.0 : r.partial_sums.back());
    j["band_labels"] = r.band_labels;
    j["band_sums"] = vec_json(r.band_sums);
    j["classification"] = to_string(r.classification);
    j["log_slope"] = num(r.log_slope);
    j["band_ratio"] = num(r.band_ratio);
    j["doubling_ratios"] = vec_json(r.doubling_ratios);
    j["threshold_verdict"] = r.threshold_verdict ? json(to_string(*r.threshold_verdict)) : json(nullptr);
    return j;
}

inline json classify_json(const ClassifyResult& res, bool with_terms) {
    json j;
    j["verdict"] = to_string(res.verdict);
    j["threshold_verdict"] = res.threshold_verdict ? json(to_string(*res.threshold_verdict)) : json(nullptr);
    j["infinite_area"] = res.infinite_area;
    j["reason"] = res.reason;
    j["truncated"] = res.truncated;
    j["bands"] = res.bands;
    j["reports"] = json::array();
    for (const auto& r : res.reports) j["reports"].push_back(report_json(r, with_terms));
    return j;
}

}  // namespace robinsim
