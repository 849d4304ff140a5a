#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pcssvm/metrics.hpp"

using namespace pcssvm;

TEST(Confusion, Tallies) {
    const std::vector<int> y{1, 1, 1, -1, -1, -1};
    const std::vector<int> p{1, -1, 1, -1, 1, -1};
    const auto c = confusion(y, p);
    EXPECT_EQ(c.tp, 2u);
    EXPECT_EQ(c.fn, 1u);
    EXPECT_EQ(c.fp, 1u);
    EXPECT_EQ(c.tn, 2u);
    EXPECT_EQ(c.total(), 6u);

    const auto perfect = confusion(y, y);
    EXPECT_EQ(perfect.fp + perfect.fn, 0u);
    std::vector<int> flipped(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) flipped[i] = -y[i];
    const auto worst = confusion(y, flipped);
    EXPECT_EQ(worst.tp + worst.tn, 0u);

    const std::vector<int> bad{1, 0};
    const std::vector<int> two{1, 1};
    EXPECT_THROW((void)confusion(bad, two), DomainError);
}

TEST(Scores, TableEightGMean) {
    const auto s = scores_from_rates(0.0211, 0.9722, 0.0379);
    EXPECT_NEAR(s.g_mean, 0.1432, 5e-5);
}

TEST(Scores, PerfectAndZeroDenominators) {
    const auto perfect = scores({5, 0, 5, 0});
    EXPECT_DOUBLE_EQ(perfect.sensitivity, 1.0);
    EXPECT_DOUBLE_EQ(perfect.specificity, 1.0);
    EXPECT_DOUBLE_EQ(perfect.precision, 1.0);
    EXPECT_DOUBLE_EQ(perfect.f_measure, 1.0);
    EXPECT_DOUBLE_EQ(perfect.g_mean, 1.0);
    EXPECT_FALSE(perfect.zero_denominator);

    const auto none = scores({0, 0, 5, 5});
    EXPECT_DOUBLE_EQ(none.sensitivity, 0.0);
    EXPECT_DOUBLE_EQ(none.f_measure, 0.0);
    EXPECT_DOUBLE_EQ(none.g_mean, 0.0);
    EXPECT_TRUE(none.zero_denominator);
    EXPECT_FALSE(std::isnan(none.precision));
}

TEST(Scores, HandComputed) {
    const auto s = scores({2, 1, 2, 1});
    EXPECT_NEAR(s.sensitivity, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(s.precision, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(s.f_measure, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(s.g_mean, 2.0 / 3.0, 1e-15);
}

TEST(Scores, GMeanProperties) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> u(0, 40);
    for (int i = 0; i < 500; ++i) {
        const auto s = scores({u(rng), u(rng), u(rng), u(rng)});
        EXPECT_LE(s.g_mean, std::max(s.sensitivity, s.specificity) + 1e-15);
        EXPECT_NEAR(s.g_mean * s.g_mean, s.sensitivity * s.specificity, 1e-15);
    }
}

TEST(Auc, Extremes) {
    const std::vector<int> y{-1, -1, 1, 1};
    const std::vector<double> up{0.1, 0.2, 0.3, 0.4};
    const std::vector<double> down{0.4, 0.3, 0.2, 0.1};
    const std::vector<double> flat{1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(auc(y, up), 1.0);
    EXPECT_DOUBLE_EQ(auc(y, down), 0.0);
    EXPECT_DOUBLE_EQ(auc(y, flat), 0.5);
    const std::vector<int> one{1, 1};
    const std::vector<double> v{0.1, 0.2};
    EXPECT_THROW((void)auc(one, v), DomainError);
}

TEST(Auc, MatchesPairCounting) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> lvl(0, 5);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 10 + rep * 3;
        std::vector<int> y(static_cast<std::size_t>(n));
        std::vector<double> f(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            y[static_cast<std::size_t>(i)] = i % 3 == 0 ? 1 : -1;
            // coarse levels force ties on even repetitions
            f[static_cast<std::size_t>(i)] = rep % 2 ? g(rng) + 0.5 * y[static_cast<std::size_t>(i)] : lvl(rng);
        }
        EXPECT_NEAR(auc(y, f), oracle::auc(y, f), 1e-12);
    }
}

TEST(Auc, ComplementAndMonotoneInvariance) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<int> y(60);
    std::vector<double> f(60), neg(60), warped(60);
    for (int i = 0; i < 60; ++i) {
        y[static_cast<std::size_t>(i)] = i % 4 == 0 ? 1 : -1;
        f[static_cast<std::size_t>(i)] = g(rng);
        neg[static_cast<std::size_t>(i)] = -f[static_cast<std::size_t>(i)];
        warped[static_cast<std::size_t>(i)] = std::exp(3.0 * f[static_cast<std::size_t>(i)]) + 7.0;
    }
    EXPECT_NEAR(auc(y, f) + auc(y, neg), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(auc(y, f), auc(y, warped));
}
