#pragma once

#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

#include "robinsim/errors.hpp"
#include "robinsim/point.hpp"

namespace robinsim {

/// {0 < x1 < 1, |(x2..xd)| < x1^alpha}
struct Cusp {
    int d = 2;
    double alpha = 2.0;
};

/// Binary tree of strips [a_k, a_{k+1}] x [b_s, b_s + 2^{-k beta}] attached to (0,1)^2.
struct FractalChannels2D {
    double alpha = 1.2;
    double beta = 2.0;
    int depth = 8;
};

/// Same tree in d >= 3 with cylindrical tubes of radius 2^{-k beta} about the line x2 = b_s.
struct FractalChannelsND {
    int d = 3;
    double alpha = 1.2;
    double beta = 2.0;
    int depth = 6;
};

/// Tree of cubes of side rho^k, parent and child joined by a ball-shaped passage.
struct SnowflakeCubes {
    int d = 3;
    double rho = 0.2;
    double beta = 1.5;
    int depth = 6;
};

struct UnitBox {
    int d = 2;
};

/// Ball of radius R centred at the origin.
struct Disk {
    int d = 2;
    double R = 1.0;
};

using Family = std::variant<Cusp, FractalChannels2D, FractalChannelsND, SnowflakeCubes, UnitBox, Disk>;

struct BStar {
    Point center;
    double radius = 0.0;
};

struct DomainSpec {
    Family family;
    BStar bstar;

    [[nodiscard]] int dim() const {
        return std::visit(
            [](const auto& f) -> int {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, FractalChannels2D>) {
                    return 2;
                } else {
                    return f.d;
                }
            },
            family);
    }

    template <class T>
    [[nodiscard]] bool is() const {
        return std::holds_alternative<T>(family);
    }
    template <class T>
    [[nodiscard]] const T& as() const {
        return std::get<T>(family);
    }
};

inline std::string family_name(const Family& f) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) return "cusp";
            else if constexpr (std::is_same_v<T, FractalChannels2D>) return "channels2d";
            else if constexpr (std::is_same_v<T, FractalChannelsND>) return "channelsNd";
            else if constexpr (std::is_same_v<T, SnowflakeCubes>) return "snowflake";
            else if constexpr (std::is_same_v<T, UnitBox>) return "box";
            else return "disk";
        },
        f);
}

/// Reference ball used when none is given: well inside the bulk part of each family.
inline BStar default_bstar(const Family& f) {
    return std::visit(
        [](const auto& v) -> BStar {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) {
                Point c(static_cast<std::size_t>(v.d));
                c[0] = 0.75;
                // Largest ball centred at x1 = 0.75 fits with radius ~0.75^alpha / sqrt(1+alpha^2).
                const double room = std::pow(0.75, v.alpha) / std::sqrt(1.0 + v.alpha * v.alpha);
                return {c, std::min(0.125, 0.5 * room)};
            } else if constexpr (std::is_same_v<T, FractalChannels2D>) {
                return {Point{0.5, 0.5}, 0.25};
            } else if constexpr (std::is_same_v<T, FractalChannelsND>) {
                Point c(static_cast<std::size_t>(v.d));
                for (int i = 0; i < v.d; ++i) c[i] = 0.5;
                return {c, 0.25};
            } else if constexpr (std::is_same_v<T, SnowflakeCubes>) {
                return {Point::zeros(static_cast<std::size_t>(v.d)), 0.2};
            } else if constexpr (std::is_same_v<T, UnitBox>) {
                Point c(static_cast<std::size_t>(v.d));
                for (int i = 0; i < v.d; ++i) c[i] = 0.5;
                return {c, 0.25};
            } else {
                return {Point::zeros(static_cast<std::size_t>(v.d)), 0.25 * v.R};
            }
        },
        f);
}

inline DomainSpec make_spec(Family f) {
    BStar b = default_bstar(f);
    return {std::move(f), std::move(b)};
}

inline DomainSpec make_spec(Family f, BStar b) { return {std::move(f), std::move(b)}; }

/// Largest admissible rho for the cube tree to have finite surface area.
inline double snowflake_rho_limit(int d) {
    return std::min(0.5, std::pow(2.0 * d - 1.0, -1.0 / (d - 1.0)));
}

/// Checks family parameter ranges. Does not check the reference ball (see validate() in geometry).
inline void validate_parameters(const Family& f) {
    auto need = [](bool ok, const char* msg) {
        if (!ok) throw InvalidParameter(msg);
    };
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) {
                need(v.d >= 2 && v.d <= static_cast<int>(kMaxDim), "cusp: d must be in [2, 8]");
                need(std::isfinite(v.alpha) && v.alpha > 1.0, "cusp: alpha must be > 1");
            } else if constexpr (std::is_same_v<T, FractalChannels2D>) {
                need(std::isfinite(v.alpha) && v.alpha > 0.0, "channels: alpha must be > 0");
                need(std::isfinite(v.beta) && v.beta > v.alpha && v.beta > 1.0,
                     "channels: need beta > alpha and beta > 1");
                need(v.depth >= 1 && v.depth <= 40, "channels: depth must be in [1, 40]");
            } else if constexpr (std::is_same_v<T, FractalChannelsND>) {
                need(v.d >= 3 && v.d <= static_cast<int>(kMaxDim), "channels: d must be in [3, 8]");
                need(std::isfinite(v.alpha) && v.alpha > 0.0, "channels: alpha must be > 0");
                need(std::isfinite(v.beta) && v.beta > v.alpha && v.beta > 1.0,
                     "channels: need beta > alpha and beta > 1");
                need(v.depth >= 1 && v.depth <= 40, "channels: depth must be in [1, 40]");
            } else if constexpr (std::is_same_v<T, SnowflakeCubes>) {
                need(v.d >= 3 && v.d <= static_cast<int>(kMaxDim), "snowflake: d must be in [3, 8]");
                need(std::isfinite(v.rho) && v.rho > 0.0 && v.rho < snowflake_rho_limit(v.d),
                     "snowflake: rho must be in (0, min(1/2, (2d-1)^(-1/(d-1))))");
                need(std::isfinite(v.beta) && v.beta > 1.0, "snowflake: beta must be > 1");
                need(v.depth >= 1 && v.depth <= 40, "snowflake: depth must be in [1, 40]");
            } else if constexpr (std::is_same_v<T, UnitBox>) {
                need(v.d >= 2 && v.d <= static_cast<int>(kMaxDim), "box: d must be in [2, 8]");
            } else {
                need(v.d >= 2 && v.d <= static_cast<int>(kMaxDim), "disk: d must be in [2, 8]");
                need(std::isfinite(v.R) && v.R > 0.0, "disk: R must be > 0");
            }
        },
        f);
}

}  // namespace robinsim
