#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "robinsim/point.hpp"

namespace robinsim {

/// Closed axis-aligned box [lo, hi].
struct AxisBox {
    Point lo;
    Point hi;

    [[nodiscard]] bool contains_open(const Point& p) const noexcept {
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!(p[i] > lo[i] && p[i] < hi[i])) return false;
        }
        return true;
    }

    [[nodiscard]] Point nearest(const Point& p) const noexcept {
        Point q = p;
        for (std::size_t i = 0; i < p.size(); ++i) q[i] = std::clamp(p[i], lo[i], hi[i]);
        return q;
    }

    /// Distance from an interior point to the box surface.
    [[nodiscard]] double clearance(const Point& p) const noexcept {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p.size(); ++i) m = std::min({m, p[i] - lo[i], hi[i] - p[i]});
        return m;
    }

    [[nodiscard]] double thickness() const noexcept {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < lo.size(); ++i) m = std::min(m, 0.5 * (hi[i] - lo[i]));
        return m;
    }

    [[nodiscard]] Point center() const noexcept { return 0.5 * (lo + hi); }
};

/// Closed solid cylinder: |p_perp - c_perp| <= radius, lo <= p[axis] <= hi.
struct AxisCylinder {
    Point center;  // a point on the axis; the axial coordinate is ignored
    std::size_t axis = 0;
    double lo = 0.0;
    double hi = 0.0;
    double radius = 0.0;

    [[nodiscard]] double radial(const Point& p) const noexcept {
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i == axis) continue;
            const double t = p[i] - center[i];
            s += t * t;
        }
        return std::sqrt(s);
    }

    [[nodiscard]] bool contains_open(const Point& p) const noexcept {
        return p[axis] > lo && p[axis] < hi && radial(p) < radius;
    }

    [[nodiscard]] Point nearest(const Point& p) const noexcept {
        Point q = p;
        q[axis] = std::clamp(p[axis], lo, hi);
        const double r = radial(p);
        if (r > radius) {
            const double s = radius / r;
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (i != axis) q[i] = center[i] + (p[i] - center[i]) * s;
            }
        }
        return q;
    }

    [[nodiscard]] double clearance(const Point& p) const noexcept {
        return std::min({radius - radial(p), p[axis] - lo, hi - p[axis]});
    }

    [[nodiscard]] double thickness() const noexcept { return std::min(radius, 0.5 * (hi - lo)); }

    [[nodiscard]] Point center_point() const noexcept {
        Point c = center;
        c[axis] = 0.5 * (lo + hi);
        return c;
    }
};

/// Closed ball.
struct Ball {
    Point center;
    double radius = 0.0;

    [[nodiscard]] bool contains_open(const Point& p) const noexcept {
        return norm_sq(p - center) < radius * radius;
    }

    [[nodiscard]] Point nearest(const Point& p) const noexcept {
        const Point v = p - center;
        const double r = norm(v);
        if (r <= radius) return p;
        return center + v * (radius / r);
    }

    [[nodiscard]] double clearance(const Point& p) const noexcept { return radius - norm(p - center); }
};

}  // namespace robinsim
