#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"

#include "edgar/benchmark.hpp"

using namespace edgar;

namespace {

/// Prepared set with one recording per (counts, candidates) entry; candidate
/// contents are irrelevant to the baselines.
PreparedSet make_set(const std::vector<std::pair<std::vector<int>, std::size_t>>& rows) {
    PreparedSet set;
    set.n_categories = rows.front().first.size() + 1;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        PreparedRecording r;
        r.series_id = "s" + std::to_string(k);
        r.label.counts = rows[k].first;
        for (std::size_t j = 0; j < rows[k].second; ++j) {
            r.xs.emplace_back(4, 0.0);
            r.times.push_back(0.1 * static_cast<double>(j));
        }
        set.recordings.push_back(std::move(r));
    }
    return set;
}

CountReport single(std::vector<int> truth, std::vector<int> est, std::size_t candidates = 10) {
    CountReport r{truth.size() + 1, {}};
    r.add({"x", std::move(est), std::move(truth), candidates});
    return r;
}

double binom_pmf(int n, int k, double p) {
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) + (n - k) * std::log1p(-p));
}

/// Exact expectation of the weighted-random E for one shot category:
/// sum_j E|Bin(n_j, p) - c_j| / sum_j c_j over series with shots.
double expected_weighted_random(const PreparedSet& set, double p) {
    double num = 0.0, den = 0.0;
    for (const auto& r : set.recordings) {
        const int c = r.label.counts[0];
        if (c == 0) continue;
        const int n = static_cast<int>(r.xs.size());
        for (int k = 0; k <= n; ++k) num += binom_pmf(n, k, p) * std::abs(k - c);
        den += c;
    }
    return num / den;
}

}  // namespace

// ---------------------------------------------------------------------------
// Error rate

TEST(ErrorRate, Examples) {
    EXPECT_EQ(error_rate(single({3}, {3})), 0.0);
    EXPECT_DOUBLE_EQ(error_rate(single({3}, {4})), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(error_rate(single({3}, {0})), 1.0);
    EXPECT_DOUBLE_EQ(error_rate(single({2, 2}, {3, 0})), 3.0 / 4.0);
}

TEST(ErrorRate, ZeroTrueTotalIsUndefined) {
    EXPECT_THROW(error_rate(single({0}, {2})), std::domain_error);
    EXPECT_THROW(error_rate(CountReport{}), std::domain_error);
    EXPECT_THROW(category_error_rate(single({0, 3}, {0, 3}), 1), std::domain_error);
}

TEST(ErrorRate, NonShotSeriesCountAsFalsePositivesOnly) {
    CountReport r{2, {}};
    r.add({"shots", {5}, {4}, 9});
    r.add({"quiet", {3}, {0}, 6});
    EXPECT_EQ(r.errors(), 1);
    EXPECT_EQ(r.false_positives(), 3);
    EXPECT_EQ(r.shot_free_series(), 1u);
    EXPECT_DOUBLE_EQ(error_rate(r), 0.25);
    EXPECT_DOUBLE_EQ(error_rate(r, Normalization::candidates), 1.0 / 9.0);
}

TEST(ErrorRate, ZeroIffAllCountsMatch) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        CountReport r{3, {}};
        bool exact = true;
        for (int s = 0; s < 5; ++s) {
            std::vector<int> t{static_cast<int>(uniform_int(rng, 1, 5)), static_cast<int>(uniform_int(rng, 0, 5))};
            auto e = t;
            if (uniform01(rng) < 0.2) {
                e[static_cast<std::size_t>(uniform_int(rng, 0, 1))] += static_cast<int>(uniform_int(rng, 1, 2));
                exact = false;
            }
            r.add({"s", e, t, 10});
        }
        const double E = error_rate(r);
        EXPECT_GE(E, 0.0);
        EXPECT_EQ(E == 0.0, exact);
    }
}

TEST(ErrorRate, ScaleFreeUnderDuplication) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        CountReport r{2, {}};
        for (int s = 0; s < 6; ++s)
            r.add({"s", {static_cast<int>(uniform_int(rng, 0, 8))}, {static_cast<int>(uniform_int(rng, 1, 6))}, 12});
        auto doubled = r;
        for (const auto& s : r.series) doubled.add(s);
        EXPECT_DOUBLE_EQ(error_rate(doubled), error_rate(r));
        EXPECT_DOUBLE_EQ(error_rate(doubled, Normalization::candidates), error_rate(r, Normalization::candidates));
    }
}

TEST(ErrorRate, PerCategory) {
    const auto r = single({4, 2}, {5, 0});
    EXPECT_DOUBLE_EQ(category_error_rate(r, 1), 0.25);
    EXPECT_DOUBLE_EQ(category_error_rate(r, 2), 1.0);
    EXPECT_THROW(category_error_rate(r, 0), std::out_of_range);
    EXPECT_THROW(category_error_rate(r, 3), std::out_of_range);
}

TEST(CountReport, RejectsWrongArity) {
    CountReport r{3, {}};
    EXPECT_THROW(r.add({"x", {1}, {1}, 2}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Baselines

TEST(Baselines, AlwaysNonShotIsOneHundredPercent) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<std::vector<int>, std::size_t>> rows;
        for (int s = 0; s < 8; ++s) {
            const int c = static_cast<int>(uniform_int(rng, 0, 5));
            rows.push_back({{c, static_cast<int>(uniform_int(rng, 0, 2))}, static_cast<std::size_t>(c + uniform_int(rng, 2, 6))});
        }
        rows[0].first[0] = 1;
        EXPECT_DOUBLE_EQ(error_rate(baseline_always_non_shot(make_set(rows))), 1.0);
    }
}

TEST(Baselines, AlwaysShotExamples) {
    EXPECT_DOUBLE_EQ(error_rate(baseline_always_shot(make_set({{{4}, 10}}))), 1.5);
    EXPECT_EQ(error_rate(baseline_always_shot(make_set({{{4}, 4}, {{7}, 7}}))), 0.0);
    EXPECT_THROW(baseline_always_shot(make_set({{{4}, 4}}), 2), std::out_of_range);
}

TEST(Baselines, AlwaysShotOnBenchmarkMatchesHandSum) {
    const auto rc = benchmark_run_config(1, 4, 3);
    const auto set = prepare(synthesize_dataset(rc.synth), rc.metric);
    long diff = 0, truth = 0;
    for (const auto& r : set.recordings) {
        if (r.label.counts[0] == 0) continue;
        diff += std::labs(static_cast<long>(r.xs.size()) - r.label.counts[0]);
        truth += r.label.counts[0];
    }
    ASSERT_GT(truth, 0);
    EXPECT_DOUBLE_EQ(error_rate(baseline_always_shot(set)), static_cast<double>(diff) / static_cast<double>(truth));
}

TEST(Baselines, ClassFrequenciesFromWeakLabels) {
    const auto set = make_set({{{3}, 10}, {{0}, 5}, {{2}, 5}});
    const auto f = class_frequencies(set);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_DOUBLE_EQ(f[1], 5.0 / 20.0);
    EXPECT_DOUBLE_EQ(f[0], 15.0 / 20.0);
}

TEST(Baselines, WeightedRandomDegenerateFrequencies) {
    const auto set = make_set({{{3}, 10}, {{1}, 4}, {{0}, 3}});
    Rng rng(4);
    const std::vector<double> never{1.0, 0.0}, always{0.0, 1.0};
    EXPECT_DOUBLE_EQ(error_rate(weighted_random_report(set, never, rng)), 1.0);
    EXPECT_DOUBLE_EQ(error_rate(weighted_random_report(set, always, rng)), error_rate(baseline_always_shot(set)));
    EXPECT_THROW(weighted_random_report(set, std::vector<double>{1.0}, rng), std::invalid_argument);
}

TEST(Baselines, WeightedRandomMeanMatchesExactExpectation) {
    const auto rc = benchmark_run_config(1, 4, 5);
    const auto split = prepare_split(synthesize_dataset(rc.synth), rc.metric, 0.5, 5);
    const auto dist = baseline_weighted_random(split.learning, split.validation, 9, 100);
    ASSERT_EQ(dist.rates.size(), 100u);
    const double p = class_frequencies(split.learning)[1];
    const double expected = expected_weighted_random(split.validation, p);
    EXPECT_NEAR(dist.mean(), expected, 3.0 * dist.sd() / std::sqrt(100.0));
    EXPECT_GT(dist.sd(), 0.0);
}

TEST(Baselines, WeightedRandomWorsensAsClassBalanceDiverges) {
    // learning set: half of the candidates are shots
    const auto learning = make_set({{{10}, 20}, {{5}, 10}});
    std::vector<double> means;
    for (int shots : {10, 6, 3, 1}) {
        std::vector<std::pair<std::vector<int>, std::size_t>> rows(30, {{shots}, 20});
        const auto eval = make_set(rows);
        means.push_back(baseline_weighted_random(learning, eval, 11, 100).mean());
        EXPECT_NEAR(means.back(), expected_weighted_random(eval, 0.5), 0.05 * means.back());
    }
    for (std::size_t i = 1; i < means.size(); ++i) EXPECT_GT(means[i], means[i - 1]);
}

// ---------------------------------------------------------------------------
// Count reports from a predictor

TEST(CountReportFromPredictor, UsesPostFilter) {
    PreparedSet set = make_set({{{1}, 3}});
    set.recordings[0].times = {0.0, 0.01, 0.02};
    const Predictor shot = [](std::span<const double>, std::vector<double>& out) { out = {0.1, 0.9}; };
    EXPECT_EQ(count_report(set, shot, true, 0.040).series[0].estimated, std::vector<int>{1});
    EXPECT_EQ(count_report(set, shot, false, 0.040).series[0].estimated, std::vector<int>{3});
}

TEST(Reports, CsvAndSummary) {
    CountReport r{2, {}};
    r.add({"a", {2}, {3}, 5});
    r.add({"b", {1}, {0}, 2});
    const std::vector<std::string> names{"non-shot", "shot"};
    std::ostringstream csv;
    write_count_csv(csv, r, names);
    EXPECT_EQ(csv.str(), "series_id,candidates,true_shot,est_shot\na,5,3,2\nb,2,0,1\n");
    std::ostringstream sum;
    write_count_summary(sum, r, names);
    EXPECT_NE(sum.str().find("33.33%"), std::string::npos);
    EXPECT_NE(sum.str().find("false positives 1"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Ablation

TEST(Ablation, RungsStackInFixedOrder) {
    const auto rungs = ablation_rungs();
    ASSERT_EQ(rungs.size(), 7u);
    const std::vector<std::string> names{"base", "+pretrain", "+zero_loss", "+relu6", "+post_filter", "+learned_post_filter", "+vat"};
    auto on = [](const Improvements& i) {
        return int(i.pretrain) + int(i.zero_loss) + int(i.relu6) + int(i.post_filter) + int(i.learned_post_filter) + int(i.vat);
    };
    for (std::size_t k = 0; k < rungs.size(); ++k) {
        EXPECT_EQ(rungs[k].name, names[k]);
        EXPECT_EQ(on(rungs[k].improvements), static_cast<int>(k));
    }
    EXPECT_EQ(rungs.back().improvements, Improvements{});
    EXPECT_TRUE(rungs[3].improvements.pretrain && rungs[3].improvements.zero_loss && rungs[3].improvements.relu6);
    EXPECT_FALSE(rungs[3].improvements.post_filter);
}

TEST(Ablation, Quantiles) {
    const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
    EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({7.0}, 0.3), 7.0);
    EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}

TEST(Ablation, NonIncreasingSteps) {
    AblationReport r;
    for (double m : {0.5, 0.4, 0.45, 0.45, 0.2})
        r.rungs.push_back({"r", {1}, {m}});
    EXPECT_EQ(r.non_increasing_steps(), 3);
}

TEST(Ablation, IdenticalRungsGiveIdenticalDistributions) {
    const auto rc = benchmark_run_config(1, 2, 8);
    const auto target = prepare_split(synthesize_dataset(rc.synth), rc.metric, 0.3, 8);
    auto cfg = rc.train;
    cfg.max_epochs = 2;
    cfg.quantize = false;
    Improvements imp;
    imp.pretrain = false;
    const std::vector<Rung> rungs{{"a", imp}, {"b", imp}};
    const auto report = ablation_report(rc.network, target, nullptr, cfg, 2, rungs);
    ASSERT_EQ(report.rungs.size(), 2u);
    EXPECT_EQ(report.rungs[0].error_rates, report.rungs[1].error_rates);
    EXPECT_EQ(report.rungs[0].seeds, report.rungs[1].seeds);
    std::ostringstream csv, q;
    write_ablation_csv(csv, report);
    write_ablation_quantiles(q, report);
    const auto rows = csv.str();
    EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 5);
    EXPECT_EQ(q.str().rfind("rung,min,q25,median,q75,max\n", 0), 0u);
}
