#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace robinsim {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// Uniform on the open interval (0, 1) from 52 high bits; with 53 the top value would round to 1.
inline double to_unit_open(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Random stream of one path keyed by (seed, path index, step index), so any step can be
/// regenerated without replaying the path.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path_index) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, path_(path_index) {}

    /// Fills out[0..n) (n <= 8) with independent standard normals for step `step`.
    void normals(std::uint64_t step, double* out, std::size_t n) const noexcept {
        for (std::size_t j = 0; 2 * j < n; ++j) {
            const auto w = block(static_cast<std::uint32_t>(j), step);
            const double u1 = to_unit_open((static_cast<std::uint64_t>(w[0]) << 32) | w[1]);
            const double u2 = to_unit_open((static_cast<std::uint64_t>(w[2]) << 32) | w[3]);
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double th = 2.0 * std::numbers::pi * u2;
            out[2 * j] = r * std::cos(th);
            if (2 * j + 1 < n) out[2 * j + 1] = r * std::sin(th);
        }
    }

    /// A uniform in (0, 1) for step `step`, from a counter lane the normals never use.
    [[nodiscard]] double uniform(std::uint64_t step) const noexcept {
        const auto w = block(4, step);
        return to_unit_open((static_cast<std::uint64_t>(w[0]) << 32) | w[1]);
    }

private:
    // Counter layout: (lane + 8 * step_hi, step_lo, path_lo, path_hi).
    [[nodiscard]] std::array<std::uint32_t, 4> block(std::uint32_t lane, std::uint64_t step) const noexcept {
        return philox4x32({lane + 8u * static_cast<std::uint32_t>(step >> 32), static_cast<std::uint32_t>(step),
                           static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)},
                          key_);
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t path_;
};

}  // namespace robinsim
