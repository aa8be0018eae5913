#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <variant>
#include <vector>

#include "robinsim/domain.hpp"
#include "robinsim/errors.hpp"
#include "robinsim/point.hpp"
#include "robinsim/primitives.hpp"
#include "robinsim/quadrature.hpp"
#include "robinsim/special.hpp"

namespace robinsim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Projection {
    Point q;
    double correction = 0.0;
    Point normal;  // zero vector when the input was already inside the open domain
};

/// Total boundary measure; `infinite` marks a divergent idealized surface.
struct AreaTotal {
    double value = 0.0;
    bool infinite = false;
};

namespace detail {

inline Point normalized(const Point& v) {
    const double n = norm(v);
    return n > 0.0 ? v * (1.0 / n) : v;
}

/// Pick the closer candidate; exact ties go to the lexicographically smaller point.
inline bool better(double d, const Point& q, double best_d, const Point& best_q) {
    return d < best_d || (d == best_d && lex_less(q, best_q));
}

}  // namespace detail

// ---------------------------------------------------------------------------

class BoxGeometry {
public:
    explicit BoxGeometry(int d) : d_(d) {}

    [[nodiscard]] int dim() const { return d_; }

    [[nodiscard]] bool contains(const Point& p) const {
        for (int i = 0; i < d_; ++i) {
            if (!(p[i] > 0.0 && p[i] < 1.0)) return false;
        }
        return true;
    }

    [[nodiscard]] double distance_to_boundary(const Point& p) const {
        double m = kInf;
        for (int i = 0; i < d_; ++i) m = std::min({m, p[i], 1.0 - p[i]});
        return m;
    }

    [[nodiscard]] Projection project(const Point& p) const {
        if (contains(p)) return {p, 0.0, Point::zeros(p.size())};
        Point q = p;
        for (int i = 0; i < d_; ++i) q[i] = std::clamp(p[i], 0.0, 1.0);
        const double c = distance(p, q);
        if (c > 0.0) return {q, c, (q - p) * (1.0 / c)};
        return {q, 0.0, boundary_normal(q)};
    }

    [[nodiscard]] Point boundary_normal(const Point& q) const {
        Point n = Point::zeros(q.size());
        for (int i = 0; i < d_; ++i) {
            if (q[i] <= 0.0) n[i] += 1.0;
            if (q[i] >= 1.0) n[i] -= 1.0;
        }
        return detail::normalized(n);
    }

    [[nodiscard]] double local_scale(const Point&) const { return kInf; }

    [[nodiscard]] AreaTotal area_total() const { return {2.0 * d_, false}; }

private:
    int d_;
};

// ---------------------------------------------------------------------------

class DiskGeometry {
public:
    DiskGeometry(int d, double R) : d_(d), R_(R) {}

    [[nodiscard]] int dim() const { return d_; }

    [[nodiscard]] bool contains(const Point& p) const { return norm_sq(p) < R_ * R_; }

    [[nodiscard]] double distance_to_boundary(const Point& p) const { return R_ - norm(p); }

    [[nodiscard]] Projection project(const Point& p) const {
        const double r = norm(p);
        if (r < R_) return {p, 0.0, Point::zeros(p.size())};
        const Point inward = p * (-1.0 / r);
        if (r == R_) return {p, 0.0, inward};
        return {p * (R_ / r), r - R_, inward};
    }

    [[nodiscard]] double local_scale(const Point&) const { return kInf; }

    [[nodiscard]] AreaTotal area_total() const {
        return {unit_sphere_area(d_ - 1) * std::pow(R_, d_ - 1), false};
    }

    [[nodiscard]] double radius() const { return R_; }

private:
    int d_;
    double R_;
};

// ---------------------------------------------------------------------------

/// {0 < x1 < 1, rho < x1^alpha} where rho is the distance to the x1 axis. All nearest-point
/// work is done in the meridian half-plane (x1, rho).
class CuspGeometry {
public:
    CuspGeometry(int d, double alpha) : d_(d), alpha_(alpha) {}

    [[nodiscard]] int dim() const { return d_; }
    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] double radius_at(double x) const { return std::pow(x, alpha_); }

    [[nodiscard]] bool contains(const Point& p) const {
        const double x = p[0];
        if (!(x > 0.0 && x < 1.0)) return false;
        return transverse_norm(p) < radius_at(x);
    }

    [[nodiscard]] double distance_to_boundary(const Point& p) const {
        const double a = p[0];
        const double b = transverse_norm(p);
        const double face = 1.0 - a;
        const double vertical = radius_at(a) - b;
        const Foot f = curve_foot(a, b, std::min(face, vertical));
        return std::min(face, std::sqrt(f.dist_sq));
    }

    [[nodiscard]] Projection project(const Point& p) const {
        if (contains(p)) return {p, 0.0, Point::zeros(p.size())};
        const double a = p[0];
        const double b = transverse_norm(p);

        // Right face {x1 = 1, rho <= 1}.
        double best_x = 1.0;
        double best_r = std::min(b, 1.0);
        double best_d2 = sq(a - 1.0) + sq(b - best_r);

        const double xc = std::clamp(a, 0.0, 1.0);
        const double bound = std::sqrt(std::min(best_d2, sq(a - xc) + sq(b - radius_at(xc))));
        const Foot f = curve_foot(a, b, bound);
        const double fr = radius_at(f.x);
        if (f.dist_sq < best_d2 || (f.dist_sq == best_d2 && f.x < best_x)) {
            best_x = f.x;
            best_r = fr;
            best_d2 = f.dist_sq;
        }
        // A point already in the closure projects onto itself.
        if (a >= 0.0 && a <= 1.0 && b <= radius_at(a)) {
            best_x = a;
            best_r = b;
            best_d2 = 0.0;
        }

        Point q = lift(p, b, best_x, best_r);
        const double c = distance(p, q);
        if (c > 0.0) return {q, c, (q - p) * (1.0 / c)};
        return {q, 0.0, boundary_normal(q)};
    }

    [[nodiscard]] Point boundary_normal(const Point& q) const {
        const double x = q[0];
        const double b = transverse_norm(q);
        Point n = Point::zeros(q.size());
        if (x <= 0.0) {
            n[0] = 1.0;
            return n;
        }
        const bool on_face = x >= 1.0;
        const bool on_side = b >= radius_at(std::min(x, 1.0)) && b > 0.0;
        if (on_face) n[0] -= 1.0;
        if (on_side) {
            const double slope = alpha_ * std::pow(x, alpha_ - 1.0);
            const double s = 1.0 / std::sqrt(1.0 + slope * slope);
            n[0] += slope * s;
            for (int i = 1; i < d_; ++i) n[i] -= s * q[i] / b;
        }
        return detail::normalized(n);
    }

    /// Cross-section radius; sets the time step scale near the tip.
    [[nodiscard]] double local_scale(const Point& p) const {
        return radius_at(std::clamp(p[0], 0.0, 1.0));
    }

    [[nodiscard]] AreaTotal area_total() const {
        return {lateral_area(0.0, 1.0) + unit_ball_volume(d_ - 1), false};
    }

    /// Lateral surface measure of the cusp wall between x1 = a and x1 = b.
    [[nodiscard]] double lateral_area(double a, double b, bool fast = false) const {
        const double al = alpha_;
        const int m = d_ - 2;
        auto integrand = [al, m](double x) {
            if (x <= 0.0) return m == 0 ? 1.0 : 0.0;
            const double t = std::pow(x, al - 1.0);
            const double slope = al * t;
            const double r = t * x;
            return std::pow(r, m) * std::sqrt(1.0 + slope * slope);
        };
        const double s = unit_sphere_area(m);
        if (fast) return s * gauss_legendre5(integrand, a, b);
        return s * integrate(integrand, a, b, {1e-12, 1e-300, 50});
    }

    /// Volume between x1 = a and x1 = b (closed form).
    [[nodiscard]] double volume(double a, double b) const {
        const double p = alpha_ * (d_ - 1);
        return unit_ball_volume(d_ - 1) * (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
    }

    struct Foot {
        double x;
        double dist_sq;
    };

    /// Nearest point of the closed wall curve rho = x^alpha (0 <= x <= 1) to (a, b), given that
    /// it lies within `bound` of the query.
    [[nodiscard]] Foot curve_foot(double a, double b, double bound) const {
        const double lo = std::max(0.0, a - bound);
        const double hi = std::min(1.0, a + bound);
        if (!(hi > lo)) {
            const double x = std::clamp(a, 0.0, 1.0);
            return {x, dist_sq(a, b, x)};
        }
        if (convex_on(lo, hi, b)) return newton_foot(a, b, lo, hi);
        return sampled_foot(a, b, lo, hi);
    }

private:
    static double sq(double v) { return v * v; }

    double dist_sq(double a, double b, double x) const { return sq(x - a) + sq(radius_at(x) - b); }

    Point lift(const Point& p, double b, double x, double r) const {
        Point q(p.size());
        q[0] = x;
        if (r == 0.0) return q;
        if (b > 0.0) {
            const double s = r / b;
            for (int i = 1; i < d_; ++i) q[i] = p[i] * s;
        } else {
            // Equidistant ring: take the lexicographically smallest point on it.
            q[1] = -r;
        }
        return q;
    }

    // Lower bound of f''/2 on [lo, hi] for f(x) = (x-a)^2 + (x^alpha - b)^2.
    bool convex_on(double lo, double hi, double b) const {
        const double al = alpha_;
        double m;  // max of x^(alpha-2) on the interval
        if (al >= 2.0) {
            m = std::pow(hi, al - 2.0);
        } else {
            if (lo <= 0.0) return b == 0.0 && al >= 1.0;
            m = std::pow(lo, al - 2.0);
        }
        const double lo2 = lo > 0.0 ? std::pow(lo, 2.0 * al - 2.0) : 0.0;
        const double lb = 1.0 + al * (al - 1.0) * (lo2 - b * m) + al * al * lo2;
        return lb > 0.0;
    }

    // g = f'/2 and g' on a convex bracket, safeguarded Newton.
    Foot newton_foot(double a, double b, double lo, double hi) const {
        const double al = alpha_;
        auto eval = [&](double x, double& g, double& dg) {
            if (x <= 0.0) {
                g = x - a;
                dg = 1.0;
                return;
            }
            const double t = std::pow(x, al - 2.0);
            const double x1 = t * x;   // x^(alpha-1)
            const double xa = x1 * x;  // x^alpha
            g = (x - a) + al * x1 * (xa - b);
            dg = 1.0 + al * (al - 1.0) * t * (xa - b) + al * al * x1 * x1;
        };
        double g, dg;
        eval(lo, g, dg);
        if (g >= 0.0) return {lo, dist_sq(a, b, lo)};
        eval(hi, g, dg);
        if (g <= 0.0) return {hi, dist_sq(a, b, hi)};
        double l = lo, h = hi;
        double x = std::clamp(a, lo, hi);
        for (int it = 0; it < 100; ++it) {
            eval(x, g, dg);
            if (g == 0.0) break;
            if (g < 0.0) l = x; else h = x;
            double nx = x - g / dg;
            if (nx == x) break;
            if (!(nx > l && nx < h)) nx = 0.5 * (l + h);
            const double step = std::abs(nx - x);
            x = nx;
            if (step <= 1e-15 * std::max(x, 1e-300) || h - l <= 1e-15 * std::max(h, 1e-300)) break;
        }
        return {x, dist_sq(a, b, x)};
    }

    Foot sampled_foot(double a, double b, double lo, double hi) const {
        constexpr int n = 256;
        int best = 0;
        double best_f = kInf;
        for (int i = 0; i <= n; ++i) {
            const double x = lo + (hi - lo) * i / n;
            const double f = dist_sq(a, b, x);
            if (f < best_f) {
                best_f = f;
                best = i;
            }
        }
        double l = lo + (hi - lo) * std::max(best - 1, 0) / n;
        double h = lo + (hi - lo) * std::min(best + 1, n) / n;
        // Golden-section on the bracketing cell pair.
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = h - gr * (h - l);
        double e = l + gr * (h - l);
        double fc = dist_sq(a, b, c);
        double fe = dist_sq(a, b, e);
        for (int it = 0; it < 200 && h - l > 1e-16 * std::max(h, 1e-300); ++it) {
            if (fc < fe) {
                h = e;
                e = c;
                fe = fc;
                c = h - gr * (h - l);
                fc = dist_sq(a, b, c);
            } else {
                l = c;
                c = e;
                fc = fe;
                e = l + gr * (h - l);
                fe = dist_sq(a, b, e);
            }
        }
        Foot out{0.5 * (l + h), dist_sq(a, b, 0.5 * (l + h))};
        for (double x : {lo, hi}) {
            const double f = dist_sq(a, b, x);
            if (f < out.dist_sq) out = {x, f};
        }
        return out;
    }

    int d_;
    double alpha_;
};

// ---------------------------------------------------------------------------

/// Binary tree of channels attached to the unit box. Strips (d = 2) or tubes (d >= 3) of
/// generation k sit at x2 = j 2^-k over a_k <= x1 <= a_{k+1}. Each odd child also gets a short
/// connector to its parent, so every generation stays attached to the root box.
class ChannelGeometry {
public:
    ChannelGeometry(int d, double alpha, double beta, int depth)
        : d_(d), alpha_(alpha), beta_(beta), depth_(depth) {
        a_.assign(static_cast<std::size_t>(depth + 2), 0.0);
        w_.assign(static_cast<std::size_t>(depth + 2), 0.0);
        for (int k = 1; k <= depth + 1; ++k) {
            a_[k] = a_[k - 1] + std::pow(2.0, -(k - 1) * alpha);
            w_[k] = std::pow(2.0, -k * beta);
        }
        Point lo = Point::zeros(static_cast<std::size_t>(d));
        Point hi(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) hi[i] = 1.0;
        root_ = {lo, hi};
    }

    [[nodiscard]] int dim() const { return d_; }
    [[nodiscard]] int depth() const { return depth_; }
    [[nodiscard]] double a(int k) const { return a_[k]; }
    /// Strip width (d = 2) or tube radius (d >= 3) at generation k.
    [[nodiscard]] double width(int k) const { return w_[k]; }
    [[nodiscard]] bool planar() const { return d_ == 2; }

    [[nodiscard]] bool contains(const Point& p) const {
        bool in = false;
        visit_near(p, 0.0, [&](const auto& prim, int) {
            if (!in && prim.contains_open(p)) in = true;
        });
        return in;
    }

    /// Certified lower bound: the largest clearance inside any single piece containing p.
    [[nodiscard]] double distance_to_boundary(const Point& p) const {
        double best = 0.0;
        visit_near(p, 0.0, [&](const auto& prim, int) {
            if (prim.contains_open(p)) best = std::max(best, prim.clearance(p));
        });
        return best;
    }

    [[nodiscard]] Projection project(const Point& p) const {
        if (contains(p)) return {p, 0.0, Point::zeros(p.size())};
        double best_d = kInf;
        Point best_q = p;
        Point best_c = p;
        visit_near(p, kInf, [&](const auto& prim, int) {
            const Point q = prim.nearest(p);
            const double dd = distance(p, q);
            if (detail::better(dd, q, best_d, best_q)) {
                best_d = dd;
                best_q = q;
                best_c = center_of(prim);
            }
        }, &best_d);
        if (best_d > 0.0) return {best_q, best_d, (best_q - p) * (1.0 / best_d)};
        return {best_q, 0.0, detail::normalized(best_c - best_q)};
    }

    [[nodiscard]] double local_scale(const Point& p) const {
        double s = 0.0;
        bool any = false;
        visit_near(p, 0.0, [&](const auto& prim, int k) {
            if (prim.contains_open(p)) {
                any = true;
                s = std::max(s, k == 0 ? kInf : prim.thickness());
            }
        });
        if (any) return s;
        // On a glue face between pieces: use the thinnest generation touching p.
        const int k = generation_of(p[0]);
        return k == 0 ? kInf : (planar() ? 0.5 * w_[k] : w_[k]);
    }

    /// Idealized infinite-depth surface measure: root box faces plus, per generation, the
    /// lateral walls and one end cap of every channel.
    [[nodiscard]] AreaTotal area_total() const { return channel_area_total(d_, alpha_, beta_); }

    static AreaTotal channel_area_total(int d, double alpha, double beta) {
        if (d == 2 && alpha <= 1.0) return {0.0, true};
        double total = 2.0 * d;
        const double sl = unit_sphere_area(d - 2);
        const double vb = unit_ball_volume(d - 1);
        for (int k = 1; k < 4000; ++k) {
            const double r = radius_param(d, beta, k);
            const double len = std::pow(2.0, -(k - 1) * alpha);
            const double term = std::pow(2.0, k) * (sl * std::pow(r, d - 2) * len + vb * std::pow(r, d - 1));
            total += term;
            if (term < 1e-17 * total) break;
        }
        return {total, false};
    }

    /// Half-width used for measures: d = 2 strips are treated as flat cylinders of radius w/2.
    static double radius_param(int d, double beta, int k) {
        const double w = std::pow(2.0, -k * beta);
        return d == 2 ? 0.5 * w : w;
    }

    AxisBox strip2d(int k, std::int64_t j) const {
        const double b = std::ldexp(static_cast<double>(j), -k);
        return {Point{a_[k], b}, Point{a_[k + 1], b + w_[k]}};
    }
    AxisBox connector2d(int k, std::int64_t i) const {
        const double b = std::ldexp(static_cast<double>(i), -(k - 1));
        return {Point{a_[k], b}, Point{a_[k] + w_[k], b + std::ldexp(1.0, -k) + w_[k]}};
    }
    AxisCylinder tube(int k, std::int64_t j) const {
        Point c = Point::zeros(static_cast<std::size_t>(d_));
        c[1] = std::ldexp(static_cast<double>(j), -k);
        return {c, 0, a_[k], a_[k + 1], w_[k]};
    }
    AxisCylinder connector_tube(int k, std::int64_t i) const {
        Point c = Point::zeros(static_cast<std::size_t>(d_));
        c[0] = a_[k] + w_[k];
        const double b = std::ldexp(static_cast<double>(i), -(k - 1));
        return {c, 1, b, b + std::ldexp(1.0, -k), w_[k]};
    }

private:
    static Point center_of(const AxisBox& b) { return b.center(); }
    static Point center_of(const AxisCylinder& c) { return c.center_point(); }

    int generation_of(double x) const {
        for (int k = depth_; k >= 1; --k) {
            if (x >= a_[k]) return k;
        }
        return 0;
    }

    // Calls f(primitive, generation) for the root box and, per generation whose x1 range lies
    // within `reach` of p (or the live value *live_reach), for the pieces nearest p in x2.
    template <class F>
    void visit_near(const Point& p, double reach, F&& f, const double* live_reach = nullptr) const {
        f(root_, 0);
        const auto lim = [&] { return live_reach ? *live_reach : reach; };
        for (int k = 1; k <= depth_; ++k) {
            const double xlo = a_[k];
            const double xhi = std::max(a_[k + 1], a_[k] + 2.0 * w_[k]);
            const double dx = p[0] < xlo ? xlo - p[0] : (p[0] > xhi ? p[0] - xhi : 0.0);
            if (dx > lim()) {
                if (p[0] < xlo) break;
                continue;
            }
            const std::int64_t nk = std::int64_t{1} << k;
            const auto j0 = static_cast<std::int64_t>(std::floor(std::ldexp(p[1], k)));
            for (std::int64_t j = j0 - 1; j <= j0 + 1; ++j) {
                if (j < 0 || j >= nk) continue;
                if (planar()) f(strip2d(k, j), k); else f(tube(k, j), k);
            }
            if (k >= 2) {
                const std::int64_t nparent = nk / 2;
                const auto i0 = static_cast<std::int64_t>(std::floor(std::ldexp(p[1], k - 1)));
                for (std::int64_t i = i0 - 1; i <= i0 + 1; ++i) {
                    if (i < 0 || i >= nparent) continue;
                    if (planar()) f(connector2d(k, i), k); else f(connector_tube(k, i), k);
                }
            }
        }
    }

    int d_;
    double alpha_;
    double beta_;
    int depth_;
    std::vector<double> a_;
    std::vector<double> w_;
    AxisBox root_;
};

// ---------------------------------------------------------------------------

/// Cube tree: generation g cubes have side rho^g and hang centred on a free face of their
/// parent. Parent and child communicate through a ball centred on the shared face; elsewhere the
/// shared face is a wall. The full tree is built to a bounded generation, after which only the
/// chain along +e1 continues to the requested depth.
class SnowflakeGeometry {
public:
    static constexpr std::size_t kMaxCubes = 5000;

    SnowflakeGeometry(int d, double rho, double beta, int depth)
        : d_(d), rho_(rho), beta_(beta), depth_(depth) {
        build();
    }

    [[nodiscard]] int dim() const { return d_; }
    [[nodiscard]] const std::vector<AxisBox>& cubes() const { return cubes_; }
    [[nodiscard]] const std::vector<Ball>& passages() const { return passages_; }
    [[nodiscard]] int full_generations() const { return full_gen_; }

    /// Passage radius between generations g-1 and g, capped so the ball stays inside the two
    /// cubes it joins.
    static double passage_radius(double rho, double beta, int g) {
        return std::min(2.0 * std::pow(rho, (g - 1) * beta), 0.25 * std::pow(rho, g));
    }

    [[nodiscard]] bool contains(const Point& p) const {
        for (const auto& c : cubes_) {
            if (c.contains_open(p)) return true;
        }
        for (const auto& b : passages_) {
            if (b.contains_open(p)) return true;
        }
        return false;
    }

    [[nodiscard]] double distance_to_boundary(const Point& p) const {
        double best = 0.0;
        for (const auto& c : cubes_) {
            if (c.contains_open(p)) best = std::max(best, c.clearance(p));
        }
        for (const auto& b : passages_) {
            if (b.contains_open(p)) best = std::max(best, b.clearance(p));
        }
        return best;
    }

    [[nodiscard]] Projection project(const Point& p) const {
        if (contains(p)) return {p, 0.0, Point::zeros(p.size())};
        double best_d = kInf;
        Point best_q = p;
        Point best_c = p;
        for (const auto& c : cubes_) {
            const Point q = c.nearest(p);
            const double dd = distance(p, q);
            if (detail::better(dd, q, best_d, best_q)) {
                best_d = dd;
                best_q = q;
                best_c = c.center();
            }
        }
        if (best_d > 0.0) return {best_q, best_d, (best_q - p) * (1.0 / best_d)};
        return {best_q, 0.0, detail::normalized(best_c - best_q)};
    }

    [[nodiscard]] double local_scale(const Point& p) const {
        double s = 0.0;
        for (const auto& c : cubes_) {
            if (c.contains_open(p)) s = std::max(s, c.thickness());
        }
        return s > 0.0 ? s : kInf;
    }

    [[nodiscard]] AreaTotal area_total() const { return snowflake_area_total(d_, rho_, beta_); }

    /// Idealized one-sided surface measure: every cube face counted from the inside, minus the
    /// passage openings on both sides of each shared face.
    static AreaTotal snowflake_area_total(int d, double rho, double beta) {
        const double growth = std::pow(rho, d - 1) * (2.0 * d - 1.0);
        if (growth >= 1.0) return {0.0, true};
        const double vb = unit_ball_volume(d - 1);
        double total = 2.0 * d;
        double count = 2.0 * d;  // cubes in generation 1
        for (int g = 1; g < 100000; ++g) {
            const double face = std::pow(rho, g * (d - 1));
            const double hole = vb * std::pow(passage_radius(rho, beta, g), d - 1);
            const double term = count * (2.0 * d * face - 2.0 * hole);
            total += term;
            if (std::abs(term) < 1e-17 * total) break;
            count *= 2.0 * d - 1.0;
        }
        return {total, false};
    }

private:
    struct Node {
        Point center;
        double side;
        int gen;
        int back_axis;  // face leading to the parent, encoded 2*axis + (sign < 0)
    };

    bool overlaps_existing(const Point& c, double s) const {
        for (const auto& q : cubes_) {
            bool all = true;
            for (int i = 0; i < d_; ++i) {
                const double half = 0.5 * (s + (q.hi[i] - q.lo[i]));
                // Absolute slack covers rounding of the centre coordinates once cubes get tiny.
                const double slack = 1e-9 * half + 1e-15 * (1.0 + std::abs(c[i]));
                if (!(std::abs(c[i] - 0.5 * (q.lo[i] + q.hi[i])) < half - slack)) {
                    all = false;
                    break;
                }
            }
            if (all) return true;
        }
        return false;
    }

    void add_cube(const Point& c, double s) {
        Point lo = c, hi = c;
        for (int i = 0; i < d_; ++i) {
            lo[i] -= 0.5 * s;
            hi[i] += 0.5 * s;
        }
        cubes_.push_back({lo, hi});
    }

    void build() {
        // Full tree while the cube budget allows.
        std::size_t total = 1;
        std::size_t layer = 2 * static_cast<std::size_t>(d_);
        full_gen_ = 0;
        while (full_gen_ < depth_ && total + layer <= kMaxCubes) {
            total += layer;
            ++full_gen_;
            layer *= 2 * static_cast<std::size_t>(d_) - 1;
        }
        std::vector<Node> current{{Point::zeros(static_cast<std::size_t>(d_)), 1.0, 0, -1}};
        add_cube(current[0].center, 1.0);
        std::size_t chain = 0;  // index in `current` of the cube on the +e1 chain
        for (int g = 0; g < depth_; ++g) {
            const double s_child = std::pow(rho_, g + 1);
            const bool full = g < full_gen_;
            if (current.empty()) break;
            if (!full) {
                current = {current[chain]};
                chain = 0;
            }
            std::vector<Node> next;
            std::size_t next_chain = 0;
            for (std::size_t pi = 0; pi < current.size(); ++pi) {
                const Node par = current[pi];
                for (int dir = 0; dir < 2 * d_; ++dir) {
                    if (dir == par.back_axis) continue;
                    if (!full && dir != 0) break;
                    const int axis = dir / 2;
                    const double sign = (dir % 2 == 0) ? 1.0 : -1.0;
                    Point c = par.center;
                    c[axis] += sign * 0.5 * (par.side + s_child);
                    if (overlaps_existing(c, s_child)) continue;
                    add_cube(c, s_child);
                    Point z = par.center;
                    z[axis] += sign * 0.5 * par.side;
                    passages_.push_back({z, passage_radius(rho_, beta_, g + 1)});
                    if (pi == chain && dir == 0) next_chain = next.size();
                    // The child's face toward its parent points the opposite way.
                    next.push_back({c, s_child, g + 1, 2 * axis + (sign > 0 ? 1 : 0)});
                }
            }
            current = std::move(next);
            chain = next_chain;
        }
    }

    int d_;
    double rho_;
    double beta_;
    int depth_;
    int full_gen_ = 0;
    std::vector<AxisBox> cubes_;
    std::vector<Ball> passages_;
};

// ---------------------------------------------------------------------------

using Geometry = std::variant<BoxGeometry, DiskGeometry, CuspGeometry, ChannelGeometry, SnowflakeGeometry>;

inline Geometry compile_geometry(const Family& f) {
    return std::visit(
        [](const auto& v) -> Geometry {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) return CuspGeometry(v.d, v.alpha);
            else if constexpr (std::is_same_v<T, FractalChannels2D>)
                return ChannelGeometry(2, v.alpha, v.beta, v.depth);
            else if constexpr (std::is_same_v<T, FractalChannelsND>)
                return ChannelGeometry(v.d, v.alpha, v.beta, v.depth);
            else if constexpr (std::is_same_v<T, SnowflakeCubes>)
                return SnowflakeGeometry(v.d, v.rho, v.beta, v.depth);
            else if constexpr (std::is_same_v<T, UnitBox>) return BoxGeometry(v.d);
            else return DiskGeometry(v.d, v.R);
        },
        f);
}

/// A validated spec together with its compiled geometry. Immutable and safe to share.
class Domain {
public:
    explicit Domain(DomainSpec spec) : spec_(std::move(spec)), geom_(compile_geometry(spec_.family)) {}

    [[nodiscard]] const DomainSpec& spec() const { return spec_; }
    [[nodiscard]] const Geometry& geometry() const { return geom_; }
    [[nodiscard]] int dim() const { return spec_.dim(); }

    [[nodiscard]] bool contains(const Point& p) const {
        require_dim(p, static_cast<std::size_t>(dim()));
        return std::visit([&](const auto& g) { return g.contains(p); }, geom_);
    }

    [[nodiscard]] double distance_to_boundary(const Point& p) const {
        if (!contains(p)) throw ContractViolation("distance_to_boundary: point is not inside the domain");
        return std::visit([&](const auto& g) { return g.distance_to_boundary(p); }, geom_);
    }

    [[nodiscard]] Projection project_to_closure(const Point& p) const {
        require_dim(p, static_cast<std::size_t>(dim()));
        return std::visit([&](const auto& g) { return g.project(p); }, geom_);
    }

    [[nodiscard]] double local_scale(const Point& p) const {
        return std::visit([&](const auto& g) { return g.local_scale(p); }, geom_);
    }

    [[nodiscard]] AreaTotal boundary_area_total() const {
        return std::visit([](const auto& g) { return g.area_total(); }, geom_);
    }

private:
    DomainSpec spec_;
    Geometry geom_;
};

/// Idealized total boundary measure, computable for any parameters (including ones outside
/// the finite-area range, which report infinite).
inline AreaTotal boundary_area_total(const DomainSpec& spec) {
    return std::visit(
        [](const auto& v) -> AreaTotal {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) return CuspGeometry(v.d, v.alpha).area_total();
            else if constexpr (std::is_same_v<T, FractalChannels2D>)
                return ChannelGeometry::channel_area_total(2, v.alpha, v.beta);
            else if constexpr (std::is_same_v<T, FractalChannelsND>)
                return ChannelGeometry::channel_area_total(v.d, v.alpha, v.beta);
            else if constexpr (std::is_same_v<T, SnowflakeCubes>)
                return SnowflakeGeometry::snowflake_area_total(v.d, v.rho, v.beta);
            else if constexpr (std::is_same_v<T, UnitBox>) return BoxGeometry(v.d).area_total();
            else return DiskGeometry(v.d, v.R).area_total();
        },
        spec.family);
}

inline bool contains(const DomainSpec& spec, const Point& p) { return Domain(spec).contains(p); }

inline double distance_to_boundary(const DomainSpec& spec, const Point& p) {
    return Domain(spec).distance_to_boundary(p);
}

inline Projection project_to_closure(const DomainSpec& spec, const Point& p) {
    return Domain(spec).project_to_closure(p);
}

/// Full validation: parameter ranges plus a reference ball strictly inside the domain.
inline void validate(const DomainSpec& spec) {
    validate_parameters(spec.family);
    const auto d = static_cast<std::size_t>(spec.dim());
    if (spec.bstar.center.size() != d) throw InvalidParameter("bstar centre has the wrong dimension");
    if (!spec.bstar.center.finite()) throw InvalidParameter("bstar centre must be finite");
    if (!(spec.bstar.radius > 0.0) || !std::isfinite(spec.bstar.radius))
        throw InvalidParameter("bstar radius must be > 0");
    const Domain dom(spec);
    if (!dom.contains(spec.bstar.center)) throw InvalidParameter("bstar centre lies outside the domain");
    if (!(dom.distance_to_boundary(spec.bstar.center) > spec.bstar.radius))
        throw InvalidParameter("bstar must sit inside the domain with positive clearance");
}

}  // namespace robinsim
