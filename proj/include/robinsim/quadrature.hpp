#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "robinsim/errors.hpp"

namespace robinsim {

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkResult {
    double value;
    double error;
};

template <class F>
GkResult gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace detail

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_depth = 40;
};

/// Adaptive Gauss-Kronrod integration of f over [a, b] by recursive bisection.
/// Intervals are processed left to right so results are reproducible.
template <class F>
double integrate(F&& f, double a, double b, QuadratureOptions opt = {}) {
    if (a == b) return 0.0;
    struct Pending {
        double a, b;
        int depth;
    };
    const auto whole = detail::gk15(f, a, b);
    const double scale = std::abs(whole.value);
    double total = 0.0;
    double worst = 0.0;
    bool failed = false;
    std::vector<Pending> stack{{a, b, 0}};
    while (!stack.empty()) {
        const Pending cur = stack.back();
        stack.pop_back();
        const auto r = detail::gk15(f, cur.a, cur.b);
        const double width_share = std::abs(cur.b - cur.a) / std::abs(b - a);
        const double allowed = std::max(opt.abs_tol, opt.rel_tol * scale) * std::max(width_share, 1e-6);
        if (r.error <= allowed || r.error < 1e-15 * std::abs(r.value)) {
            total += r.value;
            continue;
        }
        if (cur.depth >= opt.max_depth) {
            total += r.value;
            worst = std::max(worst, r.error);
            failed = true;
            continue;
        }
        const double m = 0.5 * (cur.a + cur.b);
        // Right half pushed first so the left half is summed first.
        stack.push_back({m, cur.b, cur.depth + 1});
        stack.push_back({cur.a, m, cur.depth + 1});
    }
    if (!std::isfinite(total)) throw QuadratureError("non-finite integral", worst);
    if (failed && worst > 1e-4 * std::max(std::abs(total), 1e-300)) {
        throw QuadratureError("adaptive quadrature did not converge", worst);
    }
    return total;
}

/// Fixed 5-point Gauss-Legendre rule, used on tiny smooth intervals.
template <class F>
double gauss_legendre5(F&& f, double a, double b) {
    static constexpr std::array<double, 3> x = {0.0, 0.538469310105683091036314420700208,
                                                0.906179845938663992797626878299393};
    static constexpr std::array<double, 3> w = {0.568888888888888888888888888888889,
                                                0.478628670499366468077250150834664,
                                                0.236926885056189087514264040719917};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = w[0] * f(c);
    for (int i = 1; i < 3; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
    return s * h;
}

}  // namespace robinsim
