#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace edgar;

namespace {

std::vector<double> random_distribution(Rng& rng, std::size_t n, bool allow_zeros = false) {
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) {
        v = allow_zeros && uniform01(rng) < 0.2 ? 0.0 : -std::log(1.0 - uniform01(rng));
        s += v;
    }
    if (s == 0.0) {
        p[0] = 1.0;
        return p;
    }
    for (auto& v : p) v /= s;
    return p;
}

}  // namespace

TEST(Target, Definition) {
    EXPECT_EQ(build_target(WeakLabel{{3}}, 10).p, (std::vector<double>{0.7, 0.3}));
    EXPECT_EQ(build_target(WeakLabel{{0}}, 7).p, (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(build_target(WeakLabel{{5, 5}}, 20).p, (std::vector<double>{0.5, 0.25, 0.25}));
}

TEST(Target, MoreEventsThanCandidatesIsUnusable) {
    EXPECT_THROW(build_target(WeakLabel{{4}}, 3), unusable_recording);
    EXPECT_THROW(build_target(WeakLabel{{1}}, 0), std::invalid_argument);
}

TEST(Aggregate, Examples) {
    const std::vector<std::vector<double>> one{{0.2, 0.8}};
    EXPECT_EQ(aggregate(one), (std::vector<double>{0.2, 0.8}));
    const std::vector<std::vector<double>> two{{1.0, 0.0}, {0.0, 1.0}};
    EXPECT_EQ(aggregate(two), (std::vector<double>{0.5, 0.5}));
    EXPECT_THROW(aggregate(std::vector<std::vector<double>>{}), std::invalid_argument);
}

TEST(Aggregate, MatchesNaiveMean) {
    Rng rng(8);
    std::vector<std::vector<double>> preds;
    for (int i = 0; i < 100; ++i) preds.push_back(random_distribution(rng, 3));
    const auto m = aggregate(preds);
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (const auto& p : preds) s += p[c];
        EXPECT_LT(std::abs(m[c] - s / 100.0), 1e-12);
        total += m[c];
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Loss, Examples) {
    const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
    const double kl = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
    EXPECT_NEAR(proportion_loss(p, q, true), kl, 1e-15);
    EXPECT_NEAR(proportion_loss(p, q, true), 0.14384, 1e-5);
    const std::vector<double> one{1.0, 0.0}, half{0.5, 0.5};
    EXPECT_NEAR(proportion_loss(one, half, true), std::log(2.0), 1e-15);
    EXPECT_EQ(proportion_loss(p, p, true), 0.0);
    // Without the zero-loss term the value is the cross entropy.
    EXPECT_NEAR(proportion_loss(p, q, false), -0.5 * std::log(0.25) - 0.5 * std::log(0.75), 1e-15);
}

TEST(Loss, ClampsZeroPredictions) {
    const std::vector<double> p{0.5, 0.5}, q{1.0, 0.0};
    EXPECT_NEAR(proportion_loss(p, q, false), -0.5 * std::log(1e-12), 1e-9);
    EXPECT_TRUE(std::isfinite(proportion_loss(p, q, true)));
}

TEST(Loss, ZeroLossIsKlDivergence) {
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 2, 6));
        const auto p = random_distribution(rng, n, true);
        const auto q = random_distribution(rng, n);
        ASSERT_LT(proportion_loss(p, p, true), 1e-9);
        ASSERT_GE(proportion_loss(p, q, true), -1e-12);
        double ref = 0.0;
        for (std::size_t c = 0; c < n; ++c)
            if (p[c] > 0.0) ref += p[c] * std::log(p[c] / q[c]);
        ASSERT_NEAR(proportion_loss(p, q, true), ref, 1e-10);
    }
}

TEST(Loss, GradientMatchesFiniteDifferences) {
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto p = random_distribution(rng, 3, true);
        const auto q = random_distribution(rng, 3);
        const auto g = proportion_loss_grad(p, q);
        const auto r = testutil::fd_check([&](const std::vector<double>& qq) { return proportion_loss(p, qq, true); }, q, g, 1e-7);
        EXPECT_LT(r.max_rel, 1e-5);
        EXPECT_EQ(r.skipped, 0u);
    }
}
