#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace edgar;

namespace {

std::vector<std::vector<double>> shots_at(std::size_t n, std::vector<std::size_t> shot_idx) {
    std::vector<std::vector<double>> p(n, {0.9, 0.1});
    for (auto i : shot_idx) p[i] = {0.1, 0.9};
    return p;
}

}  // namespace

TEST(Mask, NoShotsKeepsEverything) {
    const auto p = shots_at(3, {});
    const std::vector<double> t{0.0, 0.01, 0.02};
    const auto r = mask_duplicates(p, t, 0.040);
    EXPECT_EQ(r.mask, std::vector<bool>(3, true));
    EXPECT_EQ(r.preds, p);
}

TEST(Mask, WindowReopensAfterExpiry) {
    const auto p = shots_at(3, {0, 1, 2});
    const std::vector<double> t{0.0, 0.010, 0.050};
    const auto r = mask_duplicates(p, t, 0.040);
    EXPECT_EQ(r.mask, (std::vector<bool>{true, false, true}));
    EXPECT_EQ(r.preds[1], (std::vector<double>{1.0, 0.0}));
}

TEST(Mask, MaskedShotOpensNoWindow) {
    const auto p = shots_at(3, {0, 1, 2});
    const std::vector<double> t{0.0, 0.030, 0.060};
    EXPECT_EQ(duplicate_mask(p, t, 0.040), (std::vector<bool>{true, false, true}));
}

TEST(Mask, EqualTimestampsAreNotMasked) {
    const auto p = shots_at(2, {0, 1});
    const std::vector<double> t{0.01, 0.01};
    EXPECT_EQ(duplicate_mask(p, t, 0.040), (std::vector<bool>{true, true}));
}

TEST(Mask, UnsortedTimestampsAreAnError) {
    const auto p = shots_at(2, {0});
    const std::vector<double> t{0.02, 0.01};
    EXPECT_THROW(duplicate_mask(p, t, 0.04), std::invalid_argument);
    const std::vector<ShotPrediction> s{{0.02, 1}, {0.01, 1}};
    EXPECT_THROW(simple_post_filter(s, 0.04), std::invalid_argument);
}

TEST(PostFilter, Examples) {
    const std::vector<ShotPrediction> one{{0.5, 1}};
    EXPECT_EQ(simple_post_filter(one, 0.040), one);
    const std::vector<ShotPrediction> s{{0.0, 1}, {0.020, 1}, {0.041, 2}};
    EXPECT_EQ(simple_post_filter(s, 0.040), (std::vector<ShotPrediction>{{0.0, 1}, {0.041, 2}}));
}

TEST(PostFilter, MatchesAlgorithmReplayOnRandomInstances) {
    Rng rng(314);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(uniform_int(rng, 0, 20));
        const auto n_cat = static_cast<std::size_t>(uniform_int(rng, 2, 4));
        std::vector<std::vector<double>> y(n, std::vector<double>(n_cat));
        std::vector<double> t(n);
        double clock = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (auto& v : y[j]) s += (v = uniform01(rng));
            for (auto& v : y[j]) v /= s;
            // on a 5 ms grid so that exact window-edge cases occur
            clock += 0.005 * static_cast<double>(uniform_int(rng, 0, 10));
            t[j] = clock;
        }
        const double t_m = 0.005 * static_cast<double>(uniform_int(rng, 1, 12));
        const auto ours = mask_duplicates(y, t, t_m);
        const auto [ref_out, ref_mask] = testutil::algorithm_replay(y, t, t_m);
        ASSERT_EQ(ours.mask, ref_mask) << "trial " << trial;
        ASSERT_EQ(ours.preds, ref_out) << "trial " << trial;

        // surviving shots == post-filtered shots
        std::vector<ShotPrediction> surviving;
        for (std::size_t j = 0; j < n; ++j)
            if (ours.mask[j] && argmax(y[j]) != 0) surviving.push_back({t[j], argmax(y[j])});
        ASSERT_EQ(simple_post_filter(shot_predictions(y, t), t_m), surviving) << "trial " << trial;
    }
}

TEST(PostFilter, CountShots) {
    const auto p = shots_at(4, {0, 1, 3});
    const std::vector<double> t{0.0, 0.02, 0.03, 0.2};
    EXPECT_EQ(count_shots(p, t, 2, true, 0.04), std::vector<int>{2});
    EXPECT_EQ(count_shots(p, t, 2, false, 0.04), std::vector<int>{3});
}

TEST(PostFilter, WindowSuppressedCount) {
    const std::vector<ShotPrediction> kept{{0.0, 1}, {0.1, 1}};
    const std::vector<double> cands{0.0, 0.01, 0.04, 0.05, 0.1, 0.13, 0.2};
    EXPECT_EQ(count_window_suppressed(cands, kept, 0.04), 3u);
}
