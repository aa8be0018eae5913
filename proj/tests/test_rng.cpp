#include <cmath>
#include <cstdint>

#include <gtest/gtest.h>

#include "robinsim/rng.hpp"
#include "robinsim/stats.hpp"

using namespace robinsim;

// Known-answer vectors published with the Random123 library for Philox4x32-10.
TEST(Philox, KnownAnswerZero) {
    const auto r = philox4x32({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r[0], 0x6627e8d5u);
    EXPECT_EQ(r[1], 0xe169c58du);
    EXPECT_EQ(r[2], 0xbc57ac4cu);
    EXPECT_EQ(r[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
    const auto r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(r[0], 0x408f276du);
    EXPECT_EQ(r[1], 0x41c83b0eu);
    EXPECT_EQ(r[2], 0xa20bc7c6u);
    EXPECT_EQ(r[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPiDigits) {
    const auto r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(r[0], 0xd16cfe09u);
    EXPECT_EQ(r[1], 0x94fdccebu);
    EXPECT_EQ(r[2], 0x5001e420u);
    EXPECT_EQ(r[3], 0x24126ea1u);
}

TEST(PathStream, UnitIntervalIsOpen) {
    EXPECT_GT(to_unit_open(0), 0.0);
    EXPECT_LT(to_unit_open(~std::uint64_t{0}), 1.0);
}

TEST(PathStream, RegeneratesAnyStep) {
    const PathStream a(17, 5), b(17, 5);
    double x[3], y[3];
    a.normals(123456789012ull, x, 3);
    b.normals(123456789012ull, y, 3);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(x[i], y[i]);
    EXPECT_EQ(a.uniform(9), b.uniform(9));
}

TEST(PathStream, StreamsDifferAcrossSeedPathAndStep) {
    double base[2], other[2];
    PathStream(1, 0).normals(0, base, 2);
    PathStream(2, 0).normals(0, other, 2);
    EXPECT_NE(base[0], other[0]);
    PathStream(1, 1).normals(0, other, 2);
    EXPECT_NE(base[0], other[0]);
    PathStream(1, 0).normals(1, other, 2);
    EXPECT_NE(base[0], other[0]);
    // High step bits land in a different counter word.
    PathStream(1, 0).normals(std::uint64_t{1} << 32, other, 2);
    EXPECT_NE(base[0], other[0]);
}

TEST(PathStream, NormalMoments) {
    BatchAccumulator acc[8];
    for (std::uint64_t p = 0; p < 2000; ++p) {
        const PathStream s(3, p);
        for (std::uint64_t k = 0; k < 10; ++k) {
            double z[8];
            s.normals(k, z, 8);
            for (int i = 0; i < 8; ++i) acc[i].add(z[i]);
        }
    }
    for (const auto& a : acc) {
        EXPECT_NEAR(a.mean(), 0.0, 4.0 / std::sqrt(20000.0));
        EXPECT_NEAR(a.variance(), 1.0, 0.05);
    }
}

TEST(PathStream, UniformMoments) {
    BatchAccumulator acc;
    const PathStream s(11, 2);
    for (std::uint64_t k = 0; k < 50000; ++k) {
        const double u = s.uniform(k);
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        acc.add(u);
    }
    EXPECT_NEAR(acc.mean(), 0.5, 0.01);
    EXPECT_NEAR(acc.variance(), 1.0 / 12.0, 0.003);
}
