#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "robinsim/domain.hpp"
#include "robinsim/errors.hpp"
#include "robinsim/geometry.hpp"
#include "robinsim/special.hpp"

namespace robinsim {

enum class CutKind { Hyperplane, Cap, Disk };

/// One cross-cut. `level(p)` changes sign across the cut and is positive on the anchor side.
struct Cut {
    CutKind kind = CutKind::Hyperplane;
    int band = 0;
    double position = 0.0;  // x1 coordinate where the cut meets the channel axis
    int toward_anchor = -1; // hyperplanes: +1 if the anchor has larger x1, -1 otherwise
    Point center;           // caps and disks
    double radius = 0.0;
    int side = 0;           // caps: -1 on the reference-ball side of the passage, +1 beyond it

    [[nodiscard]] double level(const Point& p) const {
        switch (kind) {
            case CutKind::Hyperplane:
            case CutKind::Disk:
                return toward_anchor * (p[0] - position);
            case CutKind::Cap:
                return side < 0 ? radius - distance(p, center) : distance(p, center) - radius;
        }
        return 0.0;
    }
};

struct Block {
    std::int64_t n = 0;
    double r = 0.0;
    double area = 0.0;
    double volume = 0.0;
    int band = 0;
};

struct BlockDecomposition {
    Point anchor;
    std::vector<Cut> gammas;  // gammas[i] is the cut numbered i + 1
    std::vector<Block> blocks;
    double ratio_lo = 0.0;
    double ratio_hi = 0.0;
    int first_band = 0;
    int last_band = 0;
    bool truncated = false;  // stopped by the representable depth rather than by n_max
    int d = 0;

    /// Cut with 1-based index n.
    [[nodiscard]] const Cut& gamma(std::int64_t n) const {
        if (n < 1 || n > static_cast<std::int64_t>(gammas.size()))
            throw ContractViolation("cut index out of range");
        return gammas[static_cast<std::size_t>(n - 1)];
    }

    [[nodiscard]] const Block& block(std::int64_t n) const {
        if (n < 1 || n > static_cast<std::int64_t>(blocks.size()))
            throw ContractViolation("block index out of range");
        return blocks[static_cast<std::size_t>(n - 1)];
    }

    /// Index range [first, last] (1-based, inclusive) of blocks with the given band label.
    [[nodiscard]] std::pair<std::int64_t, std::int64_t> band_range(int band) const {
        const auto lo = std::lower_bound(blocks.begin(), blocks.end(), band,
                                         [](const Block& b, int k) { return b.band < k; });
        const auto hi = std::upper_bound(blocks.begin(), blocks.end(), band,
                                         [](int k, const Block& b) { return k < b.band; });
        return {lo - blocks.begin() + 1, hi - blocks.begin()};
    }
};

struct DecomposeOptions {
    std::int64_t n_max = std::int64_t{1} << 16;
    int max_bands = 20;
};

/// The deepest boundary point each family supports as an anchor.
inline Point default_anchor(const DomainSpec& spec) {
    const auto d = static_cast<std::size_t>(spec.dim());
    return std::visit(
        [d](const auto& v) -> Point {
            using T = std::decay_t<decltype(v)>;
            Point z = Point::zeros(d);
            if constexpr (std::is_same_v<T, Cusp>) {
                return z;
            } else if constexpr (std::is_same_v<T, FractalChannels2D> || std::is_same_v<T, FractalChannelsND>) {
                z[0] = 1.0 / (1.0 - std::pow(2.0, -v.alpha));
                return z;
            } else if constexpr (std::is_same_v<T, SnowflakeCubes>) {
                z[0] = 0.5 + v.rho / (1.0 - v.rho);
                return z;
            } else {
                throw UnsupportedAnchor("family has no channel-end anchor");
            }
        },
        spec.family);
}

namespace detail {

inline void finish(BlockDecomposition& dec) {
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) dec.blocks[i].n = static_cast<std::int64_t>(i + 1);
    double lo = kInf, hi = 0.0;
    for (std::size_t i = 0; i + 1 < dec.blocks.size(); ++i) {
        const double q = dec.blocks[i].r / dec.blocks[i + 1].r;
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    if (dec.blocks.size() < 2) lo = hi = 1.0;
    dec.ratio_lo = lo;
    dec.ratio_hi = hi;
    if (!dec.blocks.empty()) {
        dec.first_band = dec.blocks.front().band;
        dec.last_band = dec.blocks.back().band;
    }
}

// --- cusp ---------------------------------------------------------------------

inline std::vector<double> cusp_band_cuts(double alpha, int k) {
    // 2^-k + j 2^-k alpha for j = 0 .. floor(2^{k(alpha-1)} - 1), listed toward the tip.
    const double step = std::pow(2.0, -k * alpha);
    const double base = std::ldexp(1.0, -k);
    const auto jmax = static_cast<std::int64_t>(std::floor(std::pow(2.0, k * (alpha - 1.0)) - 1.0 + 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(jmax + 1));
    for (std::int64_t j = jmax; j >= 0; --j) out.push_back(base + static_cast<double>(j) * step);
    return out;
}

inline BlockDecomposition decompose_cusp(const DomainSpec& spec, const Cusp& c, const DecomposeOptions& opt) {
    BlockDecomposition dec;
    dec.d = c.d;
    dec.anchor = Point::zeros(static_cast<std::size_t>(c.d));
    const CuspGeometry geom(c.d, c.alpha);
    const double clear_x = spec.bstar.center[0] - spec.bstar.radius;

    // First band whose cuts all stay clear of the reference ball.
    int k0 = 1;
    while (k0 < 60 && cusp_band_cuts(c.alpha, k0).front() >= clear_x) ++k0;

    std::vector<std::vector<double>> bands;
    std::int64_t count = 0;
    int k = k0;
    dec.truncated = true;
    for (; k < k0 + opt.max_bands; ++k) {
        const double expected = std::pow(2.0, k * (c.alpha - 1.0));
        if (static_cast<double>(count) + expected > static_cast<double>(opt.n_max) + 1.0) {
            dec.truncated = false;
            break;
        }
        auto cuts = cusp_band_cuts(c.alpha, k);
        count += static_cast<std::int64_t>(cuts.size());
        bands.push_back(std::move(cuts));
    }
    if (bands.empty()) {
        // Budget smaller than one band: take the first n_max + 1 cuts of it.
        auto cuts = cusp_band_cuts(c.alpha, k0);
        cuts.resize(std::min<std::size_t>(cuts.size(), static_cast<std::size_t>(opt.n_max + 1)));
        bands.push_back(std::move(cuts));
        dec.truncated = false;
    }
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
        for (double x : bands[bi]) {
            Cut cut;
            cut.kind = CutKind::Hyperplane;
            cut.band = k0 + static_cast<int>(bi);
            cut.position = x;
            cut.toward_anchor = -1;
            dec.gammas.push_back(cut);
        }
    }
    dec.blocks.reserve(dec.gammas.size());
    for (std::size_t i = 0; i + 1 < dec.gammas.size(); ++i) {
        const double hi = dec.gammas[i].position;
        const double lo = dec.gammas[i + 1].position;
        Block b;
        b.r = hi - lo;
        b.band = dec.gammas[i + 1].band;
        b.area = geom.lateral_area(lo, hi, b.r < 0.05 * lo);
        b.volume = geom.volume(lo, hi);
        dec.blocks.push_back(b);
    }
    finish(dec);
    return dec;
}

// --- channels -----------------------------------------------------------------

struct TubeMeasure {
    double lateral_per_length;  // wall measure per unit length along x1
    double section;             // cross-section measure
};

inline TubeMeasure tube_measure(int d, double beta, int k) {
    const double r = ChannelGeometry::radius_param(d, beta, k);
    return {unit_sphere_area(d - 2) * std::pow(r, d - 2), unit_ball_volume(d - 1) * std::pow(r, d - 1)};
}

/// Wall measure and volume of a full side tree whose root channel has generation k.
inline std::pair<double, double> channel_subtree(int d, double alpha, double beta, int k, int depth) {
    const bool infinite_area = d == 2 && alpha <= 1.0;
    const int last = infinite_area ? std::max(depth, k) : k + 4000;
    double area = 0.0, vol = 0.0;
    for (int j = k; j <= last; ++j) {
        const double mult = std::ldexp(1.0, j - k);
        const double len = std::pow(2.0, -j * alpha);
        const TubeMeasure t = tube_measure(d, beta, j);
        const double da = mult * (t.lateral_per_length * len + t.section);
        area += da;
        vol += mult * t.section * len;
        if (!infinite_area && da < 1e-17 * area) break;
    }
    return {area, vol};
}

inline BlockDecomposition decompose_channels(int d, double alpha, double beta, int depth,
                                             const DecomposeOptions& opt) {
    BlockDecomposition dec;
    dec.d = d;
    dec.anchor = Point::zeros(static_cast<std::size_t>(d));
    dec.anchor[0] = 1.0 / (1.0 - std::pow(2.0, -alpha));
    const int kmax = std::min(depth, opt.max_bands);
    std::vector<double> a(static_cast<std::size_t>(kmax + 2), 0.0);
    for (int k = 1; k <= kmax + 1; ++k) a[k] = a[k - 1] + std::pow(2.0, -(k - 1) * alpha);

    std::int64_t count = 0;
    dec.truncated = true;
    double prev_last = std::numeric_limits<double>::quiet_NaN();
    for (int k = 1; k <= kmax; ++k) {
        const double h = std::pow(2.0, -k * beta);
        const auto nk = static_cast<std::int64_t>(std::floor(std::pow(2.0, k * (beta - alpha)) + 1e-9));
        if (count + nk > opt.n_max + 1 && k > 1) {
            dec.truncated = false;
            break;
        }
        const TubeMeasure tk = tube_measure(d, beta, k);
        for (std::int64_t n = 1; n <= nk; ++n) {
            Cut cut;
            cut.kind = CutKind::Hyperplane;
            cut.band = k;
            cut.position = a[k] + static_cast<double>(n) * h;
            cut.toward_anchor = +1;
            dec.gammas.push_back(cut);
            Block b;
            b.band = k;
            if (n == 1) {
                if (k == 1) continue;  // the first cut has no predecessor
                // Junction: end of the parent channel, the step wall and the side tree.
                const TubeMeasure tp = tube_measure(d, beta, k - 1);
                const double l1 = a[k] - prev_last;
                const auto side = channel_subtree(d, alpha, beta, k, depth);
                b.r = cut.position - prev_last;
                b.area = tp.lateral_per_length * l1 + tk.lateral_per_length * h +
                         (tp.section - tk.section) + side.first;
                b.volume = tp.section * l1 + tk.section * h + side.second;
            } else {
                b.r = h;
                b.area = tk.lateral_per_length * h;
                b.volume = tk.section * h;
            }
            dec.blocks.push_back(b);
        }
        count += nk;
        prev_last = dec.gammas.back().position;
    }
    finish(dec);
    return dec;
}

// --- snowflake ------------------------------------------------------------------

struct SnowflakeMeasures {
    int d;
    double rho, beta;

    double hole(int g) const {
        if (g < 1) return 0.0;
        return unit_ball_volume(d - 1) * std::pow(SnowflakeGeometry::passage_radius(rho, beta, g), d - 1);
    }
    double face(int g) const { return std::pow(rho, g * (d - 1)); }

    /// Full side tree rooted at a generation-g cube (its own walls included).
    std::pair<double, double> subtree(int g) const {
        const double fan = 2.0 * d - 1.0;
        double area = 0.0, vol = 0.0, mult = 1.0;
        for (int j = g; j < g + 100000; ++j) {
            const double da = mult * (2.0 * d * face(j) - hole(j) - fan * hole(j + 1));
            area += da;
            vol += mult * std::pow(rho, j * d);
            if (std::abs(da) < 1e-17 * area) break;
            mult *= fan;
        }
        return {area, vol};
    }

    /// Chain cube i with its side trees, up to but excluding everything past passage i + 1.
    std::pair<double, double> chain_piece(int i) const {
        const int children = i == 0 ? 2 * d : 2 * d - 1;
        const int sides = children - 1;
        const auto st = subtree(i + 1);
        const double own_area = 2.0 * d * face(i) - hole(i) - children * hole(i + 1);
        return {own_area + sides * st.first, std::pow(rho, i * d) + sides * st.second};
    }
};

inline BlockDecomposition decompose_snowflake(const SnowflakeCubes& s, const DecomposeOptions& opt) {
    BlockDecomposition dec;
    const int d = s.d;
    dec.d = d;
    dec.anchor = Point::zeros(static_cast<std::size_t>(d));
    dec.anchor[0] = 0.5 + s.rho / (1.0 - s.rho);
    const SnowflakeMeasures sm{d, s.rho, s.beta};
    const double vb = unit_ball_volume(d - 1);
    const double vd = unit_ball_volume(d);

    // Measures are kept relative to the band's passage so that consecutive differences do not
    // cancel against the O(1) totals; the gap between passages m and m + 1 is rho^m.
    struct Pending {
        Cut cut;
        double offset;
        double darea;
        double dvol;
    };
    std::vector<Pending> cuts;
    std::vector<std::pair<double, double>> pieces;  // chain piece between passages m and m + 1
    double center = 0.0;  // x1 centre of the current chain cube
    const int kmax = std::min(s.depth, opt.max_bands);
    dec.truncated = true;
    for (int m = 1; m <= kmax; ++m) {
        const double side_prev = std::pow(s.rho, m - 1);
        const double zx = center + 0.5 * side_prev;
        Point z = Point::zeros(static_cast<std::size_t>(d));
        z[0] = zx;
        const double lo_r = 8.0 * std::pow(s.rho, (m - 1) * s.beta);
        const int jlo = static_cast<int>(std::ceil(std::log2(lo_r) - 1e-12));
        const int jback = static_cast<int>(std::floor(std::log2(side_prev / 4.0) + 1e-12));
        const int jfront = static_cast<int>(std::floor(std::log2(std::pow(s.rho, m) / 4.0) + 1e-12));
        const double h = sm.hole(m);

        std::vector<Pending> band;
        for (int j = jback; j >= jlo; --j) {
            const double R = std::ldexp(1.0, j);
            Cut c;
            c.kind = CutKind::Cap;
            c.band = m;
            c.center = z;
            c.radius = R;
            c.side = -1;
            c.position = zx - R;
            band.push_back({c, -R, -(vb * std::pow(R, d - 1) - h), -0.5 * vd * std::pow(R, d)});
        }
        {
            Cut c;
            c.kind = CutKind::Disk;
            c.band = m;
            c.center = z;
            c.radius = SnowflakeGeometry::passage_radius(s.rho, s.beta, m);
            c.position = zx;
            c.toward_anchor = +1;
            band.push_back({c, 0.0, 0.0, 0.0});
        }
        for (int j = jlo; j <= jfront; ++j) {
            const double R = std::ldexp(1.0, j);
            Cut c;
            c.kind = CutKind::Cap;
            c.band = m;
            c.center = z;
            c.radius = R;
            c.side = +1;
            c.position = zx + R;
            band.push_back({c, R, vb * std::pow(R, d - 1) - h, 0.5 * vd * std::pow(R, d)});
        }
        if (static_cast<std::int64_t>(cuts.size() + band.size()) > opt.n_max + 1 && m > 1) {
            dec.truncated = false;
            break;
        }
        cuts.insert(cuts.end(), band.begin(), band.end());
        pieces.push_back(sm.chain_piece(m));
        center += 0.5 * (side_prev + std::pow(s.rho, m));
    }
    for (const auto& p : cuts) dec.gammas.push_back(p.cut);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Pending& a = cuts[i];
        const Pending& b = cuts[i + 1];
        Block blk;
        blk.band = b.cut.band;
        blk.r = b.offset - a.offset;
        blk.area = b.darea - a.darea;
        blk.volume = b.dvol - a.dvol;
        if (b.cut.band != a.cut.band) {
            const auto& piece = pieces[static_cast<std::size_t>(a.cut.band - 1)];
            blk.r += std::pow(s.rho, a.cut.band);
            blk.area += piece.first;
            blk.volume += piece.second;
        }
        dec.blocks.push_back(blk);
    }
    finish(dec);
    return dec;
}

}  // namespace detail

/// Cross-cut decomposition toward `anchor`, listed from the reference ball side. Whole bands
/// are kept together; the result holds at most n_max blocks unless a single band is larger.
inline BlockDecomposition decompose(const DomainSpec& spec, const Point& anchor, DecomposeOptions opt = {}) {
    if (opt.n_max < 1) throw ContractViolation("n_max must be >= 1");
    const Point expect = default_anchor(spec);
    require_dim(anchor, expect.size());
    if (distance(anchor, expect) > 1e-9 * std::max(1.0, norm(expect)))
        throw UnsupportedAnchor("only the channel-end anchor of this family is supported");
    return std::visit(
        [&](const auto& v) -> BlockDecomposition {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cusp>) return detail::decompose_cusp(spec, v, opt);
            else if constexpr (std::is_same_v<T, FractalChannels2D>)
                return detail::decompose_channels(2, v.alpha, v.beta, v.depth, opt);
            else if constexpr (std::is_same_v<T, FractalChannelsND>)
                return detail::decompose_channels(v.d, v.alpha, v.beta, v.depth, opt);
            else if constexpr (std::is_same_v<T, SnowflakeCubes>) return detail::decompose_snowflake(v, opt);
            else throw UnsupportedAnchor("family has no channel-end anchor");
        },
        spec.family);
}

inline BlockDecomposition decompose(const DomainSpec& spec, DecomposeOptions opt = {}) {
    return decompose(spec, default_anchor(spec), opt);
}

struct BlockMeasure {
    double r;
    double area;
    double volume;
};

/// Measures of blocks first..last (1-based, inclusive).
inline std::vector<BlockMeasure> block_measures(const BlockDecomposition& dec, std::int64_t first, std::int64_t last) {
    if (first < 1 || last > static_cast<std::int64_t>(dec.blocks.size()) || first > last + 1)
        throw ContractViolation("block range out of bounds");
    std::vector<BlockMeasure> out;
    for (std::int64_t n = first; n <= last; ++n) {
        const Block& b = dec.block(n);
        out.push_back({b.r, b.area, b.volume});
    }
    return out;
}

inline std::vector<BlockMeasure> block_measures(const DomainSpec& spec, std::int64_t first, std::int64_t last) {
    DecomposeOptions opt;
    opt.n_max = std::max<std::int64_t>(4 * last, std::int64_t{1} << 12);
    opt.max_bands = 60;
    return block_measures(decompose(spec, opt), first, last);
}

}  // namespace robinsim
