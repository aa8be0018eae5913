#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "robinsim/errors.hpp"

namespace robinsim {

/// Running moments of a sample. Stored as (n, mean, M2) so merges stay stable; sum and
/// sum of squares are derived.
class BatchAccumulator {
public:
    void add(double x) noexcept {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
        min_ = std::min(min_, x);
        max_ = std::max(max_, x);
    }

    [[nodiscard]] std::int64_t n() const noexcept { return n_; }
    [[nodiscard]] double mean() const noexcept { return n_ > 0 ? mean_ : 0.0; }
    [[nodiscard]] double sum() const noexcept { return mean_ * static_cast<double>(n_); }
    [[nodiscard]] double sum_sq() const noexcept { return m2_ + static_cast<double>(n_) * mean_ * mean_; }
    [[nodiscard]] double min() const noexcept { return min_; }
    [[nodiscard]] double max() const noexcept { return max_; }
    [[nodiscard]] double m2() const noexcept { return m2_; }

    /// Unbiased sample variance (0 for n < 2).
    [[nodiscard]] double variance() const noexcept {
        return n_ > 1 ? std::max(0.0, m2_ / static_cast<double>(n_ - 1)) : 0.0;
    }
    [[nodiscard]] double stderr_mean() const noexcept {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

    friend BatchAccumulator merge(const BatchAccumulator& a, const BatchAccumulator& b) noexcept {
        if (a.n_ == 0) return b;
        if (b.n_ == 0) return a;
        BatchAccumulator out;
        out.n_ = a.n_ + b.n_;
        const double na = static_cast<double>(a.n_);
        const double nb = static_cast<double>(b.n_);
        const double n = static_cast<double>(out.n_);
        const double delta = b.mean_ - a.mean_;
        out.mean_ = a.mean_ + delta * (nb / n);
        out.m2_ = a.m2_ + b.m2_ + delta * delta * (na * nb / n);
        out.min_ = std::min(a.min_, b.min_);
        out.max_ = std::max(a.max_, b.max_);
        return out;
    }

    static BatchAccumulator singleton(double x) noexcept {
        BatchAccumulator a;
        a.add(x);
        return a;
    }

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double min_ = std::numeric_limits<double>::infinity();
    double max_ = -std::numeric_limits<double>::infinity();
};

inline constexpr double kZ95 = 1.96;

struct EstimateCI {
    double mean = 0.0;
    double std_err = 0.0;
    std::int64_t n = 0;
    double ci95 = 0.0;
    double truncated_fraction = 0.0;
    bool lower_bound_only = false;   // every path was truncated
    bool truncation_biased = false;  // truncated_fraction above the 1% reporting threshold
};

inline EstimateCI make_estimate(const BatchAccumulator& acc, std::int64_t truncated) {
    EstimateCI e;
    e.n = acc.n();
    e.mean = acc.mean();
    e.std_err = acc.stderr_mean();
    e.ci95 = kZ95 * e.std_err;
    e.truncated_fraction = acc.n() > 0 ? static_cast<double>(truncated) / static_cast<double>(acc.n()) : 0.0;
    e.truncation_biased = e.truncated_fraction > 0.01;
    e.lower_bound_only = acc.n() > 0 && truncated == acc.n();
    return e;
}

/// Sample quantile with linear interpolation between order statistics (type 7).
inline double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw ContractViolation("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ContractViolation("quantile level outside [0, 1]");
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// Least-squares slope of y against 0, 1, 2, ...
inline double ls_slope(std::span<const double> y) {
    const auto n = static_cast<double>(y.size());
    if (y.size() < 2) throw ContractViolation("slope needs at least two points");
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sx += static_cast<double>(i);
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dx = static_cast<double>(i) - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    return sxy / sxx;
}

/// Least-squares slope of log(band sum) against band index, for already-formed band sums.
inline double log_slope_bands(std::span<const double> band_sums) {
    if (band_sums.size() < 3) throw ContractViolation("log slope needs at least 3 bands");
    std::vector<double> y;
    y.reserve(band_sums.size());
    for (double s : band_sums) {
        if (!(s > 0.0)) throw ContractViolation("log slope needs positive band sums");
        y.push_back(std::log(s));
    }
    return ls_slope(y);
}

/// Groups consecutive terms into bands of `band_size` and fits the log slope of the band sums.
inline double log_slope(std::span<const double> terms, std::size_t band_size) {
    if (band_size == 0) throw ContractViolation("band size must be positive");
    for (double t : terms) {
        if (!(t > 0.0)) throw ContractViolation("log slope needs positive terms");
    }
    std::vector<double> sums;
    for (std::size_t i = 0; i + band_size <= terms.size(); i += band_size) {
        double s = 0.0;
        for (std::size_t j = i; j < i + band_size; ++j) s += terms[j];
        sums.push_back(s);
    }
    return log_slope_bands(sums);
}

}  // namespace robinsim
