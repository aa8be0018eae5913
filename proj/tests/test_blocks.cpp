#include <cmath>
#include <map>
#include <numbers>

#include <gtest/gtest.h>

#include "robinsim/blocks.hpp"

using namespace robinsim;

namespace {

std::map<int, int> cuts_per_band(const BlockDecomposition& dec) {
    std::map<int, int> out;
    for (const auto& c : dec.gammas) ++out[c.band];
    return out;
}

DecomposeOptions budget(std::int64_t n) {
    DecomposeOptions o;
    o.n_max = n;
    return o;
}

}  // namespace

TEST(CuspCuts, BandTwoPositions) {
    const auto cuts = detail::cusp_band_cuts(2.0, 2);
    ASSERT_EQ(cuts.size(), 4u);
    // Listed toward the tip.
    EXPECT_DOUBLE_EQ(cuts[0], 0.4375);
    EXPECT_DOUBLE_EQ(cuts[1], 0.375);
    EXPECT_DOUBLE_EQ(cuts[2], 0.3125);
    EXPECT_DOUBLE_EQ(cuts[3], 0.25);

    const auto dec = decompose(make_spec(Cusp{2, 2.0}));
    std::vector<double> band2;
    for (const auto& c : dec.gammas)
        if (c.band == 2) band2.push_back(c.position);
    EXPECT_EQ(band2, cuts);
}

TEST(CuspCuts, BandCountGrowsLikeTwoToTheKAlphaMinusOne) {
    for (double alpha : {1.5, 2.0, 2.5}) {
        const auto dec = decompose(make_spec(Cusp{2, alpha}));
        for (auto [k, n] : cuts_per_band(dec)) {
            const double expect = std::pow(2.0, k * (alpha - 1.0));
            EXPECT_GE(n, 0.5 * expect) << alpha << ' ' << k;
            EXPECT_LE(n, expect + 1e-9) << alpha << ' ' << k;
        }
    }
}

TEST(SnowflakeCuts, BandCountGrowsLinearly) {
    const auto dec = decompose(make_spec(SnowflakeCubes{3, 0.2, 1.5, 20}));
    for (auto [k, n] : cuts_per_band(dec)) {
        if (k < 8) continue;
        EXPECT_GE(n, 0.5 * k) << k;
        EXPECT_LE(n, 2.5 * k) << k;
    }
}

TEST(CuspMeasures, PlanarVolumeClosedForm) {
    const auto dec = decompose(make_spec(Cusp{2, 2.0}), budget(2000));
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
        const double b = dec.gammas[i].position, a = dec.gammas[i + 1].position;
        EXPECT_NEAR(dec.blocks[i].volume, 2.0 * (b * b * b - a * a * a) / 3.0, 1e-12 * dec.blocks[i].volume);
    }
}

TEST(CuspMeasures, PlanarAreaScalesWithTwoToTheMinusKAlpha) {
    const double alpha = 2.0;
    const auto dec = decompose(make_spec(Cusp{2, alpha}));
    for (const auto& b : dec.blocks) {
        const double ratio = b.area / std::pow(2.0, -b.band * alpha);
        EXPECT_GE(ratio, 2.0);
        EXPECT_LE(ratio, 3.0);
    }
}

TEST(CuspMeasures, SurfaceOfRevolutionMatchesDenseSampling) {
    const double alpha = 1.5;
    const auto dec = decompose(make_spec(Cusp{3, alpha}), budget(500));
    for (std::int64_t n : {1, 5, 40, 200}) {
        const double hi = dec.gamma(n).position, lo = dec.gamma(n + 1).position;
        // Midpoint rule for 2 pi int x^a sqrt(1 + a^2 x^{2a-2}) dx on 1e5 cells.
        const int m = 100000;
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            const double x = lo + (hi - lo) * (i + 0.5) / m;
            s += std::pow(x, alpha) * std::sqrt(1.0 + alpha * alpha * std::pow(x, 2.0 * alpha - 2.0));
        }
        const double oracle = 2.0 * std::numbers::pi * s * (hi - lo) / m;
        EXPECT_NEAR(dec.block(n).area / oracle, 1.0, 1e-3) << n;
    }
}

TEST(CuspMeasures, BandSumOfIndexTimesAreaIsOrderTwoToTheMinusKTwoMinusAlpha) {
    for (double alpha : {1.5, 2.0, 2.5}) {
        const auto dec = decompose(make_spec(Cusp{2, alpha}));
        std::map<int, double> sums;
        for (const auto& b : dec.blocks) sums[b.band] += static_cast<double>(b.n) * b.area;
        double lo = 1e300, hi = 0.0;
        for (auto [k, s] : sums) {
            if (k == dec.first_band) continue;
            const double q = s / std::pow(2.0, -k * (2.0 - alpha));
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
        EXPECT_LT(hi / lo, 4.0) << alpha;
    }
}

TEST(Decomposition, RatioBoundsIndependentOfBudget) {
    const DomainSpec specs[] = {make_spec(Cusp{2, 2.0}), make_spec(Cusp{3, 1.5}),
                                make_spec(FractalChannels2D{1.2, 2.0, 20}),
                                make_spec(FractalChannelsND{3, 1.2, 2.0, 20}),
                                make_spec(SnowflakeCubes{3, 0.2, 1.5, 20})};
    for (const auto& s : specs) {
        const auto a = decompose(s, budget(1 << 10)), b = decompose(s, budget(1 << 16));
        EXPECT_NEAR(a.ratio_lo, b.ratio_lo, 1e-9 * b.ratio_lo) << family_name(s.family);
        EXPECT_NEAR(a.ratio_hi, b.ratio_hi, 1e-9 * b.ratio_hi) << family_name(s.family);
        EXPECT_GT(a.ratio_lo, 0.0);
    }
    for (double alpha : {1.5, 2.0, 2.5}) {
        const auto dec = decompose(make_spec(Cusp{3, alpha}));
        EXPECT_GE(dec.ratio_lo, 1.0 - 1e-9);
        EXPECT_LE(dec.ratio_hi, std::pow(2.0, alpha) + 1e-12);
    }
}

TEST(Decomposition, BlockVolumeBoundedBelowByGapPower) {
    const DomainSpec specs[] = {make_spec(Cusp{2, 2.0}), make_spec(Cusp{3, 1.5}),
                                make_spec(FractalChannels2D{1.2, 2.0, 20}),
                                make_spec(FractalChannelsND{3, 1.2, 2.0, 20}),
                                make_spec(SnowflakeCubes{3, 0.2, 1.5, 20})};
    for (const auto& s : specs) {
        double lo_small = 1e300, lo_big = 1e300;
        const auto a = decompose(s, budget(1 << 10)), b = decompose(s, budget(1 << 16));
        for (const auto& blk : a.blocks) lo_small = std::min(lo_small, blk.volume / std::pow(blk.r, a.d));
        for (const auto& blk : b.blocks) lo_big = std::min(lo_big, blk.volume / std::pow(blk.r, b.d));
        EXPECT_GT(lo_big, 0.5) << family_name(s.family);
        EXPECT_GT(lo_big, 0.9 * lo_small) << family_name(s.family);
    }
}

TEST(Decomposition, CutsSeparateAnchorFromReferenceBall) {
    const DomainSpec specs[] = {make_spec(Cusp{2, 2.0}), make_spec(Cusp{3, 1.5}),
                                make_spec(FractalChannels2D{1.2, 2.0, 20}),
                                make_spec(FractalChannelsND{3, 1.2, 2.0, 20}),
                                make_spec(SnowflakeCubes{3, 0.2, 1.5, 20})};
    for (const auto& s : specs) {
        const auto dec = decompose(s, budget(1 << 12));
        // The straight segment from the reference-ball centre to the anchor runs down the
        // channel axis and must cross every cut.
        const Point q = s.bstar.center;
        const Point p = dec.anchor;
        for (const auto& c : dec.gammas) {
            if (c.kind == CutKind::Cap) {
                if (c.radius < 1e-8) continue;  // below the resolution of coordinates near 1
                // Both ends lie outside the cap sphere, so crossing means the segment passes
                // within one radius of its centre.
                const Point u = p - q;
                const double t = std::clamp(dot(c.center - q, u) / dot(u, u), 0.0, 1.0);
                EXPECT_GT(distance(c.center, q), c.radius);
                EXPECT_GT(distance(c.center, p), c.radius);
                EXPECT_LT(distance(c.center, q + t * u), c.radius) << family_name(s.family) << " band " << c.band;
            } else {
                EXPECT_LT(c.level(q), 0.0) << family_name(s.family);
                EXPECT_GT(c.level(p), 0.0) << family_name(s.family) << " band " << c.band;
            }
        }
    }
}

TEST(Decomposition, Errors) {
    EXPECT_THROW(decompose(make_spec(UnitBox{2})), UnsupportedAnchor);
    EXPECT_THROW(decompose(make_spec(Cusp{2, 2.0}), Point{1.0, 0.0}), UnsupportedAnchor);
    EXPECT_THROW(decompose(make_spec(Cusp{2, 2.0}), budget(0)), ContractViolation);
    const auto shallow = decompose(make_spec(FractalChannels2D{1.2, 2.0, 4}), budget(1 << 16));
    EXPECT_TRUE(shallow.truncated);
    EXPECT_THROW(block_measures(shallow, 0, 2), ContractViolation);
}

TEST(Decomposition, IndexingAndMeasures) {
    const auto dec = decompose(make_spec(Cusp{3, 2.5}));
    ASSERT_EQ(dec.gammas.size(), dec.blocks.size() + 1);
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
        EXPECT_EQ(dec.blocks[i].n, static_cast<std::int64_t>(i + 1));
        EXPECT_GT(dec.blocks[i].r, 0.0);
        EXPECT_GT(dec.blocks[i].volume, 0.0);
        EXPECT_GE(dec.blocks[i].area, 0.0);
    }
    const auto m = block_measures(dec, 3, 5);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m[0].r, dec.block(3).r);
    EXPECT_EQ(block_measures(dec, 4, 3).size(), 0u);
}
