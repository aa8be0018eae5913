#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "robinsim/blocks.hpp"
#include "robinsim/domain.hpp"
#include "robinsim/errors.hpp"
#include "robinsim/geometry.hpp"
#include "robinsim/stats.hpp"

namespace robinsim {

enum class CriterionId { S3_1, S3_2, S4_1, S4_2, S5_3, S5_4 };
enum class Classification { CONVERGES, DIVERGES, INCONCLUSIVE };
enum class Verdict { ACTIVE, NEARLY_INACTIVE, TRAP, NON_TRAP, INCONCLUSIVE };

inline const char* to_string(CriterionId id) {
    switch (id) {
        case CriterionId::S3_1: return "S3_1";
        case CriterionId::S3_2: return "S3_2";
        case CriterionId::S4_1: return "S4_1";
        case CriterionId::S4_2: return "S4_2";
        case CriterionId::S5_3: return "S5_3";
        case CriterionId::S5_4: return "S5_4";
    }
    return "?";
}

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::CONVERGES: return "CONVERGES";
        case Classification::DIVERGES: return "DIVERGES";
        case Classification::INCONCLUSIVE: return "INCONCLUSIVE";
    }
    return "?";
}

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::ACTIVE: return "ACTIVE";
        case Verdict::NEARLY_INACTIVE: return "NEARLY_INACTIVE";
        case Verdict::TRAP: return "TRAP";
        case Verdict::NON_TRAP: return "NON_TRAP";
        case Verdict::INCONCLUSIVE: return "INCONCLUSIVE";
    }
    return "?";
}

struct ClassifyOptions {
    double delta = 0.05;
    int max_fit_bands = 12;
};

struct CriterionReport {
    CriterionId id = CriterionId::S3_1;
    std::vector<double> terms;
    std::vector<double> partial_sums;
    std::vector<int> band_labels;   // one per band, in order
    std::vector<double> band_sums;  // sum of terms per band
    Classification classification = Classification::INCONCLUSIVE;
    double log_slope = 0.0;         // fitted log of the band-to-band ratio
    double band_ratio = 0.0;        // exp(log_slope)
    std::vector<double> doubling_ratios;  // S_j / S_{ceil(j/2)} for the last three band counts
    std::optional<Verdict> threshold_verdict;
};

/// Terms of the named series over every block of the decomposition.
inline std::vector<double> series_terms(const BlockDecomposition& dec, CriterionId id, int d) {
    const bool planar = id == CriterionId::S3_1 || id == CriterionId::S3_2;
    if (planar && d != 2) throw ContractViolation("S3 criteria apply in dimension 2 only");
    if (!planar && d < 3) throw ContractViolation("S4/S5 criteria need d >= 3");
    std::vector<double> out;
    out.reserve(dec.blocks.size());
    double res = 0.0;  // running sum of r_k^{2-d}
    for (const Block& b : dec.blocks) {
        const auto n = static_cast<double>(b.n);
        if (!planar) res += std::pow(b.r, 2.0 - d);
        switch (id) {
            case CriterionId::S3_1: out.push_back(n * b.area); break;
            case CriterionId::S3_2: out.push_back(n * b.r); break;
            case CriterionId::S4_1: out.push_back(b.area * res); break;
            case CriterionId::S4_2: out.push_back(std::pow(b.r, d - 1.0) * res); break;
            case CriterionId::S5_3:
            case CriterionId::S5_4: out.push_back(b.volume * res); break;
        }
    }
    return out;
}

/// Convergence call from band sums. A band is one dyadic generation of cuts. q is fitted on
/// the last K - 4 bands (at least 3, at most max_fit_bands) so early transients drop out.
///   CONVERGES    fitted band ratio q <= 1 - delta
///   DIVERGES     q >= 1 - delta/5 and S_j / S_{ceil(j/2)} >= 1 + delta for j = K, K-1, K-2
///   INCONCLUSIVE otherwise, or with fewer than 3 bands
inline void classify_series(CriterionReport& rep, const ClassifyOptions& opt = {}) {
    const std::size_t K = rep.band_sums.size();
    rep.doubling_ratios.clear();
    rep.classification = Classification::INCONCLUSIVE;
    if (K < 3) return;
    double total = 0.0;
    for (double s : rep.band_sums) total += s;
    if (total == 0.0) {
        rep.classification = Classification::CONVERGES;
        rep.log_slope = -kInf;
        rep.band_ratio = 0.0;
        return;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(opt.max_fit_bands), std::max<std::size_t>(3, K > 4 ? K - 4 : 0));
    std::vector<double> window(rep.band_sums.end() - static_cast<std::ptrdiff_t>(w), rep.band_sums.end());
    if (std::any_of(window.begin(), window.end(), [](double s) { return !(s > 0.0); })) return;
    rep.log_slope = log_slope_bands(window);
    rep.band_ratio = std::exp(rep.log_slope);

    std::vector<double> cum(K + 1, 0.0);
    for (std::size_t i = 0; i < K; ++i) cum[i + 1] = cum[i] + rep.band_sums[i];
    bool doubling_grows = true;
    for (std::size_t j = K; j + 3 > K && j >= 2; --j) {
        const std::size_t half = (j + 1) / 2;
        const double ratio = cum[half] > 0.0 ? cum[j] / cum[half] : kInf;
        rep.doubling_ratios.push_back(ratio);
        if (ratio < 1.0 + opt.delta) doubling_grows = false;
    }
    if (rep.band_ratio <= 1.0 - opt.delta) {
        rep.classification = Classification::CONVERGES;
    } else if (rep.band_ratio >= 1.0 - opt.delta / 5.0 && doubling_grows) {
        rep.classification = Classification::DIVERGES;
    }
}

inline CriterionReport make_report(const BlockDecomposition& dec, CriterionId id, int d,
                                   const ClassifyOptions& opt = {}) {
    CriterionReport rep;
    rep.id = id;
    rep.terms = series_terms(dec, id, d);
    rep.partial_sums.resize(rep.terms.size());
    double s = 0.0;
    for (std::size_t i = 0; i < rep.terms.size(); ++i) {
        s += rep.terms[i];
        rep.partial_sums[i] = s;
    }
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
        const int band = dec.blocks[i].band;
        if (rep.band_labels.empty() || rep.band_labels.back() != band) {
            rep.band_labels.push_back(band);
            rep.band_sums.push_back(0.0);
        }
        rep.band_sums.back() += rep.terms[i];
    }
    classify_series(rep, opt);
    return rep;
}

/// Verdicts that follow from the explicit parameter thresholds of each family.
struct ThresholdVerdicts {
    std::optional<Verdict> activity;
    std::optional<Verdict> trap;
};

inline ThresholdVerdicts closed_form_threshold(const DomainSpec& spec) {
    return std::visit(
        [](const auto& v) -> ThresholdVerdicts {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) {
                return {v.alpha < 2.0 ? Verdict::ACTIVE : Verdict::NEARLY_INACTIVE, std::nullopt};
            } else if constexpr (std::is_same_v<T, FractalChannels2D>) {
                const bool active = v.alpha > 1.0 && v.beta < 2.0 * v.alpha;
                return {active ? Verdict::ACTIVE : Verdict::NEARLY_INACTIVE, std::nullopt};
            } else if constexpr (std::is_same_v<T, FractalChannelsND>) {
                return {v.beta < 2.0 * v.alpha ? Verdict::ACTIVE : Verdict::NEARLY_INACTIVE, std::nullopt};
            } else if constexpr (std::is_same_v<T, SnowflakeCubes>) {
                const double d = v.d;
                return {v.beta < (d - 1.0) / (d - 2.0) ? Verdict::ACTIVE : Verdict::NEARLY_INACTIVE,
                        v.beta < d / (d - 2.0) ? Verdict::NON_TRAP : Verdict::TRAP};
            } else {
                return {Verdict::ACTIVE, Verdict::NON_TRAP};
            }
        },
        spec.family);
}

struct ClassifyResult {
    Verdict verdict = Verdict::INCONCLUSIVE;
    std::optional<Verdict> threshold_verdict;
    bool infinite_area = false;
    std::string reason;
    std::vector<CriterionReport> reports;  // sufficient-side series first
    bool truncated = false;
    int bands = 0;
};

inline bool has_decomposition(const DomainSpec& spec) {
    return !spec.is<UnitBox>() && !spec.is<Disk>();
}

/// Activity: the sufficient series converging gives ACTIVE; the divergence series diverging
/// (or an infinite surface) gives NEARLY_INACTIVE.
inline ClassifyResult classify_activity(const DomainSpec& spec, DecomposeOptions dopt = {},
                                        const ClassifyOptions& copt = {}) {
    ClassifyResult res;
    const int d = spec.dim();
    res.threshold_verdict = closed_form_threshold(spec).activity;
    const AreaTotal area = boundary_area_total(spec);
    res.infinite_area = area.infinite;
    if (!has_decomposition(spec)) {
        res.verdict = Verdict::ACTIVE;
        res.reason = "bounded Lipschitz control domain";
        return res;
    }
    const BlockDecomposition dec = decompose(spec, dopt);
    res.truncated = dec.truncated;
    res.bands = dec.last_band - dec.first_band + 1;
    const CriterionId suff = d == 2 ? CriterionId::S3_1 : CriterionId::S4_1;
    const CriterionId div = d == 2 ? CriterionId::S3_2 : CriterionId::S4_2;
    res.reports.push_back(make_report(dec, suff, d, copt));
    res.reports.push_back(make_report(dec, div, d, copt));
    for (auto& r : res.reports) r.threshold_verdict = res.threshold_verdict;
    if (area.infinite) {
        res.verdict = Verdict::NEARLY_INACTIVE;
        res.reason = "infinite boundary measure";
    } else if (res.reports[0].classification == Classification::CONVERGES) {
        res.verdict = Verdict::ACTIVE;
        res.reason = std::string(to_string(suff)) + " converges";
    } else if (res.reports[1].classification == Classification::DIVERGES) {
        res.verdict = Verdict::NEARLY_INACTIVE;
        res.reason = std::string(to_string(div)) + " diverges";
    } else {
        res.verdict = Verdict::INCONCLUSIVE;
        res.reason = "neither series decided";
    }
    return res;
}

/// Trap test for d >= 3: the volume-weighted resistance series converging gives NON_TRAP,
/// diverging gives TRAP.
inline ClassifyResult classify_trap(const DomainSpec& spec, DecomposeOptions dopt = {},
                                    const ClassifyOptions& copt = {}) {
    const int d = spec.dim();
    if (d < 3) throw UnsupportedDimension("trap criterion needs d >= 3");
    ClassifyResult res;
    res.threshold_verdict = closed_form_threshold(spec).trap;
    if (!has_decomposition(spec)) {
        res.verdict = Verdict::NON_TRAP;
        res.reason = "bounded Lipschitz control domain";
        return res;
    }
    const BlockDecomposition dec = decompose(spec, dopt);
    res.truncated = dec.truncated;
    res.bands = dec.last_band - dec.first_band + 1;
    CriterionReport r3 = make_report(dec, CriterionId::S5_3, d, copt);
    CriterionReport r4 = r3;
    r4.id = CriterionId::S5_4;
    r3.threshold_verdict = r4.threshold_verdict = res.threshold_verdict;
    res.reports = {r3, r4};
    if (r3.classification == Classification::CONVERGES) {
        res.verdict = Verdict::NON_TRAP;
        res.reason = "S5_3 converges";
    } else if (r4.classification == Classification::DIVERGES) {
        res.verdict = Verdict::TRAP;
        res.reason = "S5_4 diverges";
    } else {
        res.verdict = Verdict::INCONCLUSIVE;
        res.reason = "neither series decided";
    }
    return res;
}

/// Sum of r_i^{2-d} for i = j..n (1-based). Empty when j > n.
inline double resistance_series(const BlockDecomposition& dec, std::int64_t j, std::int64_t n, int d) {
    if (j > n) return 0.0;
    if (j < 1 || n > static_cast<std::int64_t>(dec.blocks.size()))
        throw ContractViolation("resistance_series: index out of range");
    double s = 0.0;
    for (std::int64_t i = j; i <= n; ++i) s += std::pow(dec.block(i).r, 2.0 - d);
    return s;
}

struct HittingShapes {
    double lo;  // r_n^{2-d} / sum
    double hi;  // r_{n-m2-1}^{2-d} / sum
};

/// Constant-free bound shapes for crossing probabilities over blocks n-m2-1 .. n.
inline HittingShapes hitting_bound_ratio(const BlockDecomposition& dec, std::int64_t n, std::int64_t m2, int d) {
    const std::int64_t first = n - m2 - 1;
    if (m2 < 0 || first < 1) throw ContractViolation("hitting_bound_ratio: n - m2 - 1 must be >= 1");
    const double sum = resistance_series(dec, first, n, d);
    return {std::pow(dec.block(n).r, 2.0 - d) / sum, std::pow(dec.block(first).r, 2.0 - d) / sum};
}

/// CSV rows "n,term,partial_sum" with 17 significant digits.
inline std::string report_csv(const CriterionReport& rep) {
    std::ostringstream os;
    os.precision(17);
    os << "n,term,partial_sum\n";
    for (std::size_t i = 0; i < rep.terms.size(); ++i) {
        os << (i + 1) << ',' << rep.terms[i] << ',' << rep.partial_sums[i] << '\n';
    }
    return os.str();
}

}  // namespace robinsim
