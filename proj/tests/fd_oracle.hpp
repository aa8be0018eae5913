#pragma once

// Finite-difference reference for the Robin problem on the unit square:
//   Laplace(u) = 0 in (0,1)^2 minus a Dirichlet ball,
//   du/dnu + k u = g(x, y, nu) on the square's sides (nu the outward normal),
//   u = dirichlet(x, y) on grid nodes inside the closed ball.
// Five-point Laplacian, ghost nodes for the Robin rows. Edge rows are scaled by 1/2 and corner
// rows by 1/4, which makes the matrix symmetric, so a sparse LDL^T solve suffices.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace fd {

struct Grid {
    int n = 0;  // intervals per side
    std::vector<double> u;

    [[nodiscard]] double at(int i, int j) const { return u[static_cast<std::size_t>(j * (n + 1) + i)]; }

    /// Bilinear interpolation.
    [[nodiscard]] double operator()(double x, double y) const {
        const double h = 1.0 / n;
        const int i = std::min(n - 1, std::max(0, static_cast<int>(x / h)));
        const int j = std::min(n - 1, std::max(0, static_cast<int>(y / h)));
        const double s = x / h - i, t = y / h - j;
        return (1 - s) * (1 - t) * at(i, j) + s * (1 - t) * at(i + 1, j) + (1 - s) * t * at(i, j + 1) +
               s * t * at(i + 1, j + 1);
    }
};

inline Grid solve_robin_square(int n, double k, double cx, double cy, double r,
                               const std::function<double(double, double)>& dirichlet,
                               const std::function<double(double, double, int, int)>& g = {}) {
    const double h = 1.0 / n;
    const int m = n + 1;
    auto id = [m](int i, int j) { return j * m + i; };
    auto fixed = [&](int i, int j) { return std::hypot(i * h - cx, j * h - cy) <= r; };

    std::vector<int> unknown(static_cast<std::size_t>(m * m), -1);
    int nu = 0;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            if (!fixed(i, j)) unknown[static_cast<std::size_t>(id(i, j))] = nu++;

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const int row = unknown[static_cast<std::size_t>(id(i, j))];
            if (row < 0) continue;
            const double x = i * h, y = j * h;
            const bool bx = i == 0 || i == n, by = j == 0 || j == n;
            const double scale = (bx ? 0.5 : 1.0) * (by ? 0.5 : 1.0);
            // Negative Laplacian times h^2, so the matrix is positive definite.
            double diag = 4.0;
            auto add = [&](int ii, int jj, double w) {
                const int col = unknown[static_cast<std::size_t>(id(ii, jj))];
                if (col < 0) rhs[row] += scale * w * dirichlet(ii * h, jj * h);
                else trip.emplace_back(row, col, -scale * w);
            };
            // Each missing neighbour is a ghost: u_ghost = u_mirror - 2 h (k u - g).
            auto axis = [&](int lo, int hi, bool low_edge, bool high_edge, auto nb) {
                if (low_edge) {
                    nb(hi, 2.0);
                    diag += 2.0 * h * k;
                } else if (high_edge) {
                    nb(lo, 2.0);
                    diag += 2.0 * h * k;
                } else {
                    nb(lo, 1.0);
                    nb(hi, 1.0);
                }
            };
            axis(i - 1, i + 1, i == 0, i == n, [&](int ii, double w) { add(ii, j, w); });
            axis(j - 1, j + 1, j == 0, j == n, [&](int jj, double w) { add(i, jj, w); });
            if (g) {
                double gsum = 0.0;
                if (i == 0) gsum += g(x, y, -1, 0);
                if (i == n) gsum += g(x, y, 1, 0);
                if (j == 0) gsum += g(x, y, 0, -1);
                if (j == n) gsum += g(x, y, 0, 1);
                rhs[row] += scale * 2.0 * h * gsum;
            }
            trip.emplace_back(row, row, scale * diag);
        }
    }
    Eigen::SparseMatrix<double> A(nu, nu);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw std::runtime_error("finite-difference factorisation failed");
    const Eigen::VectorXd sol = solver.solve(rhs);

    Grid out;
    out.n = n;
    out.u.resize(static_cast<std::size_t>(m * m));
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const int row = unknown[static_cast<std::size_t>(id(i, j))];
            out.u[static_cast<std::size_t>(id(i, j))] = row < 0 ? dirichlet(i * h, j * h) : sol[row];
        }
    }
    return out;
}

}  // namespace fd
