#pragma once

#include <cmath>
#include <numbers>

namespace robinsim {

/// Volume of the unit ball in R^m (m >= 0).
inline double unit_ball_volume(int m) {
    return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

/// (m)-dimensional area of the unit sphere S^m in R^{m+1}.
inline double unit_sphere_area(int m) { return (m + 1) * unit_ball_volume(m + 1); }

}  // namespace robinsim
