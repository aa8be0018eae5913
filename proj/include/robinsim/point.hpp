#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>

#include "robinsim/errors.hpp"

namespace robinsim {

inline constexpr std::size_t kMaxDim = 8;

/// Fixed-capacity point in R^d, d <= kMaxDim. Value type, no allocation.
class Point {
public:
    Point() = default;

    explicit Point(std::size_t dim) : dim_(dim) {
        if (dim == 0 || dim > kMaxDim) {
            throw ContractViolation("point dimension out of range");
        }
    }

    Point(std::initializer_list<double> coords) : Point(coords.size()) {
        std::copy(coords.begin(), coords.end(), c_.begin());
    }

    explicit Point(std::span<const double> coords) : Point(coords.size()) {
        std::copy(coords.begin(), coords.end(), c_.begin());
    }

    static Point zeros(std::size_t dim) { return Point(dim); }

    static Point unit(std::size_t dim, std::size_t axis) {
        Point p(dim);
        p[axis] = 1.0;
        return p;
    }

    [[nodiscard]] std::size_t size() const noexcept { return dim_; }

    double& operator[](std::size_t i) noexcept { return c_[i]; }
    double operator[](std::size_t i) const noexcept { return c_[i]; }

    [[nodiscard]] std::span<const double> coords() const noexcept { return {c_.data(), dim_}; }
    [[nodiscard]] std::span<double> coords() noexcept { return {c_.data(), dim_}; }

    [[nodiscard]] bool finite() const noexcept {
        return std::all_of(c_.begin(), c_.begin() + dim_, [](double v) { return std::isfinite(v); });
    }

    Point& operator+=(const Point& o) noexcept {
        for (std::size_t i = 0; i < dim_; ++i) c_[i] += o.c_[i];
        return *this;
    }
    Point& operator-=(const Point& o) noexcept {
        for (std::size_t i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Point& operator*=(double s) noexcept {
        for (std::size_t i = 0; i < dim_; ++i) c_[i] *= s;
        return *this;
    }

    friend Point operator+(Point a, const Point& b) noexcept { return a += b; }
    friend Point operator-(Point a, const Point& b) noexcept { return a -= b; }
    friend Point operator*(Point a, double s) noexcept { return a *= s; }
    friend Point operator*(double s, Point a) noexcept { return a *= s; }

    friend bool operator==(const Point& a, const Point& b) noexcept {
        return a.dim_ == b.dim_ && std::equal(a.c_.begin(), a.c_.begin() + a.dim_, b.c_.begin());
    }

    /// Lexicographic order, used for deterministic tie-breaking.
    friend bool lex_less(const Point& a, const Point& b) noexcept {
        return std::lexicographical_compare(a.c_.begin(), a.c_.begin() + a.dim_, b.c_.begin(),
                                            b.c_.begin() + b.dim_);
    }

private:
    std::array<double, kMaxDim> c_{};
    std::size_t dim_ = 0;
};

inline double dot(const Point& a, const Point& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(const Point& a) noexcept { return dot(a, a); }
inline double norm(const Point& a) noexcept { return std::sqrt(norm_sq(a)); }
inline double distance(const Point& a, const Point& b) noexcept { return norm(a - b); }

/// Euclidean norm of coordinates 1..d-1 (the cross-section radius about the x1 axis).
inline double transverse_norm(const Point& p) noexcept {
    double s = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

inline void require_dim(const Point& p, std::size_t d) {
    if (p.size() != d) throw ContractViolation("point dimension does not match domain dimension");
}

}  // namespace robinsim
