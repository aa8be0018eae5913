#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "robinsim/stats.hpp"

using namespace robinsim;

namespace {

BatchAccumulator batch(const std::vector<double>& xs) {
    BatchAccumulator a;
    for (double x : xs) a.add(x);
    return a;
}

void expect_same_moments(const BatchAccumulator& a, const BatchAccumulator& b, double rel) {
    EXPECT_EQ(a.n(), b.n());
    EXPECT_NEAR(a.mean(), b.mean(), rel * std::abs(b.mean()));
    EXPECT_NEAR(a.variance(), b.variance(), rel * b.variance());
    EXPECT_EQ(a.min(), b.min());
    EXPECT_EQ(a.max(), b.max());
}

}  // namespace

TEST(Merge, EmptyIsIdentity) {
    const auto x = batch({1.0, 2.5, -3.0});
    const BatchAccumulator empty;
    expect_same_moments(merge(x, empty), x, 0.0);
    expect_same_moments(merge(empty, x), x, 0.0);
}

TEST(Merge, TwoSingletons) {
    const auto m = merge(BatchAccumulator::singleton(2.0), BatchAccumulator::singleton(4.0));
    EXPECT_EQ(m.n(), 2);
    EXPECT_DOUBLE_EQ(m.mean(), 3.0);
    EXPECT_DOUBLE_EQ(m.sum(), 6.0);
    EXPECT_DOUBLE_EQ(m.variance(), 2.0);
}

TEST(Merge, SingletonFoldMatchesTwoPassMoments) {
    std::mt19937_64 rng(42);
    std::lognormal_distribution<double> dist(0.0, 1.0);
    std::vector<double> xs(1000);
    for (auto& x : xs) x = dist(rng);
    BatchAccumulator folded;
    for (double x : xs) folded = merge(folded, BatchAccumulator::singleton(x));
    // Two-pass oracle.
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    EXPECT_NEAR(folded.mean(), mean, 1e-12 * mean);
    EXPECT_NEAR(folded.variance(), var, 1e-12 * var);
    EXPECT_NEAR(folded.stderr_mean(), std::sqrt(var / 1000.0), 1e-12 * std::sqrt(var / 1000.0));
}

TEST(Merge, AssociativeAndCommutative) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(5.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(1 + rng() % 40), b(1 + rng() % 40), c(1 + rng() % 40);
        for (auto* v : {&a, &b, &c})
            for (auto& x : *v) x = dist(rng);
        const auto A = batch(a), B = batch(b), C = batch(c);
        expect_same_moments(merge(merge(A, B), C), merge(A, merge(B, C)), 1e-12);
        expect_same_moments(merge(A, B), merge(B, A), 1e-12);
    }
}

TEST(Moments, VarianceNeverNegative) {
    BatchAccumulator a;
    for (int i = 0; i < 100; ++i) a.add(0.1);
    EXPECT_GE(a.variance(), 0.0);
    EXPECT_EQ(BatchAccumulator::singleton(3.0).variance(), 0.0);
}

TEST(Estimate, CiAndTruncationFlags) {
    const auto acc = batch({1.0, 2.0, 3.0, 4.0});
    const auto e = make_estimate(acc, 1);
    EXPECT_DOUBLE_EQ(e.ci95, 1.96 * e.std_err);
    EXPECT_DOUBLE_EQ(e.truncated_fraction, 0.25);
    EXPECT_TRUE(e.truncation_biased);
    EXPECT_FALSE(e.lower_bound_only);
    EXPECT_TRUE(make_estimate(acc, 4).lower_bound_only);
}

TEST(Quantile, SymmetricSampleMedianNearMean) {
    std::vector<double> xs;
    for (int i = -50; i <= 50; ++i) xs.push_back(0.37 * i + 2.0);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    EXPECT_NEAR(quantile(xs, 0.5), mean, 0.37);
    EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({5.0}, 0.25), 5.0);
    EXPECT_THROW(quantile({}, 0.5), ContractViolation);
}

TEST(LogSlope, GeometricHalvingPerBand) {
    std::vector<double> terms;
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 4; ++j) terms.push_back(std::ldexp(1.0, -k) * (1.0 + j));
    EXPECT_NEAR(log_slope(terms, 4), -std::log(2.0), 1e-9);
}

TEST(LogSlope, ConstantBandsGiveZero) {
    const std::vector<double> terms(30, 0.7);
    EXPECT_NEAR(log_slope(terms, 5), 0.0, 1e-12);
}

TEST(LogSlope, Errors) {
    EXPECT_THROW(log_slope(std::vector<double>{1.0, 0.0, 1.0}, 1), ContractViolation);
    EXPECT_THROW(log_slope(std::vector<double>{1.0, -2.0, 1.0}, 1), ContractViolation);
    EXPECT_THROW(log_slope(std::vector<double>{1.0, 1.0}, 1), ContractViolation);
}
