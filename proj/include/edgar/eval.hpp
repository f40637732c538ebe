#pragma once

// Counting error rate, trivial and weighted-random baselines, and the
// incremental-improvement ablation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgar/random.hpp"
#include "edgar/trainer.hpp"

namespace edgar {

struct SeriesCounts {
    std::string series_id;
    std::vector<int> estimated;  // index i = category i + 1
    std::vector<int> truth;
    std::size_t candidates = 0;

    [[nodiscard]] long true_total() const { return std::accumulate(truth.begin(), truth.end(), 0L); }
    [[nodiscard]] long abs_error() const {
        long e = 0;
        for (std::size_t c = 0; c < truth.size(); ++c) e += std::abs(estimated[c] - truth[c]);
        return e;
    }
};

enum class Normalization { shots, candidates };

/// Per-series estimated and true counts. Recordings without shots are kept
/// apart: they contribute false positives, never to the error rate.
struct CountReport {
    std::size_t n_categories = 2;
    std::vector<SeriesCounts> series;

    void add(SeriesCounts s) {
        if (s.estimated.size() != n_categories - 1 || s.truth.size() != n_categories - 1)
            throw std::invalid_argument("CountReport: series '" + s.series_id + "' has the wrong number of categories");
        series.push_back(std::move(s));
    }

    [[nodiscard]] long true_total() const {
        long t = 0;
        for (const auto& s : series) t += s.true_total();
        return t;
    }

    /// Sum of |c_hat - c| over series with shots.
    [[nodiscard]] long errors() const {
        long e = 0;
        for (const auto& s : series)
            if (s.true_total() > 0) e += s.abs_error();
        return e;
    }

    /// Shots counted on recordings containing no shots.
    [[nodiscard]] long false_positives() const {
        long fp = 0;
        for (const auto& s : series)
            if (s.true_total() == 0) fp += std::accumulate(s.estimated.begin(), s.estimated.end(), 0L);
        return fp;
    }

    [[nodiscard]] std::size_t shot_free_series() const {
        return static_cast<std::size_t>(std::count_if(series.begin(), series.end(), [](const auto& s) { return s.true_total() == 0; }));
    }
};

inline double error_rate(const CountReport& report, Normalization norm = Normalization::shots) {
    long denom = 0;
    if (norm == Normalization::shots) {
        denom = report.true_total();
        if (denom == 0) throw std::domain_error("error rate undefined: no true shots (use the false-positive count)");
    } else {
        for (const auto& s : report.series)
            if (s.true_total() > 0) denom += static_cast<long>(s.candidates);
        if (denom == 0) throw std::domain_error("error rate undefined: no candidates on recordings with shots");
    }
    return static_cast<double>(report.errors()) / static_cast<double>(denom);
}

/// Error rate of one shot category (1-based).
inline double category_error_rate(const CountReport& report, std::size_t category) {
    if (category < 1 || category >= report.n_categories) throw std::out_of_range("category_error_rate: bad category");
    long err = 0, total = 0;
    for (const auto& s : report.series) {
        if (s.true_total() == 0) continue;
        err += std::abs(s.estimated[category - 1] - s.truth[category - 1]);
        total += s.truth[category - 1];
    }
    if (total == 0) throw std::domain_error("error rate undefined: no true shots of this category");
    return static_cast<double>(err) / static_cast<double>(total);
}

/// Counts with a trained classifier.
inline CountReport count_report(const PreparedSet& set, const Predictor& predict_fn, bool post_filter, double min_cycle_s) {
    CountReport report{set.n_categories, {}};
    std::vector<std::vector<double>> preds;
    for (const auto& rec : set.recordings) {
        preds.resize(rec.xs.size());
        for (std::size_t j = 0; j < rec.xs.size(); ++j) predict_fn(rec.xs[j], preds[j]);
        report.add({rec.series_id, count_shots(preds, rec.times, set.n_categories, post_filter, min_cycle_s), rec.label.counts,
                    rec.xs.size()});
    }
    return report;
}

/// Counts produced by labelling candidate j of each recording with `label(rec, j)`.
template <class LabelFn>
CountReport label_report(const PreparedSet& set, LabelFn&& label) {
    CountReport report{set.n_categories, {}};
    for (const auto& rec : set.recordings) {
        SeriesCounts s{rec.series_id, std::vector<int>(set.n_categories - 1, 0), rec.label.counts, rec.xs.size()};
        for (std::size_t j = 0; j < rec.xs.size(); ++j)
            if (const std::size_t c = label(rec, j); c != 0) ++s.estimated.at(c - 1);
        report.add(std::move(s));
    }
    return report;
}

inline CountReport baseline_always_non_shot(const PreparedSet& set) {
    return label_report(set, [](const PreparedRecording&, std::size_t) { return std::size_t{0}; });
}

/// Every candidate counted as a shot of `category`.
inline CountReport baseline_always_shot(const PreparedSet& set, std::size_t category = 1) {
    if (category < 1 || category >= set.n_categories) throw std::out_of_range("baseline_always_shot: bad category");
    return label_report(set, [category](const PreparedRecording&, std::size_t) { return category; });
}

/// Candidate class frequencies implied by the weak labels of a learning set:
/// shots of category i = sum of counts, non-shots = candidates - shots.
inline std::vector<double> class_frequencies(const PreparedSet& learning) {
    std::vector<double> n(learning.n_categories, 0.0);
    for (const auto& rec : learning.recordings) {
        if (!rec.usable) continue;
        long shots = 0;
        for (std::size_t c = 0; c < rec.label.counts.size(); ++c) {
            n[c + 1] += rec.label.counts[c];
            shots += rec.label.counts[c];
        }
        n[0] += static_cast<double>(std::max(0L, static_cast<long>(rec.xs.size()) - shots));
    }
    const double total = std::accumulate(n.begin(), n.end(), 0.0);
    if (total <= 0.0) throw std::invalid_argument("class_frequencies: learning set has no candidates");
    for (auto& v : n) v /= total;
    return n;
}

struct BaselineDistribution {
    std::vector<double> rates;
    [[nodiscard]] double mean() const { return std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size()); }
    [[nodiscard]] double sd() const {
        if (rates.size() < 2) return 0.0;
        const double m = mean();
        double ss = 0.0;
        for (double r : rates) ss += (r - m) * (r - m);
        return std::sqrt(ss / static_cast<double>(rates.size() - 1));
    }
};

/// Labels each candidate at random with the given class frequencies.
inline CountReport weighted_random_report(const PreparedSet& set, std::span<const double> freq, Rng& rng) {
    if (freq.size() != set.n_categories) throw std::invalid_argument("weighted_random_report: frequency vector size mismatch");
    return label_report(set, [&](const PreparedRecording&, std::size_t) {
        const double u = uniform01(rng);
        double acc = 0.0;
        for (std::size_t c = 0; c + 1 < freq.size(); ++c) {
            acc += freq[c];
            if (u < acc) return c;
        }
        return freq.size() - 1;
    });
}

inline BaselineDistribution baseline_weighted_random(const PreparedSet& learning, const PreparedSet& eval, std::uint64_t seed,
                                                     int repetitions = 100) {
    if (repetitions < 1) throw std::invalid_argument("baseline_weighted_random: repetitions must be >= 1");
    const auto freq = class_frequencies(learning);
    BaselineDistribution out;
    Rng rng(seed);
    for (int r = 0; r < repetitions; ++r) out.rates.push_back(error_rate(weighted_random_report(eval, freq, rng)));
    return out;
}

// ---------------------------------------------------------------------------
// Reports

inline void write_count_csv(std::ostream& os, const CountReport& report, std::span<const std::string> category_names) {
    os << "series_id,candidates";
    for (std::size_t c = 1; c < report.n_categories; ++c) os << ",true_" << category_names[c] << ",est_" << category_names[c];
    os << '\n';
    for (const auto& s : report.series) {
        os << s.series_id << ',' << s.candidates;
        for (std::size_t c = 0; c < s.truth.size(); ++c) os << ',' << s.truth[c] << ',' << s.estimated[c];
        os << '\n';
    }
}

/// Table-style summary: E per category and overall, then false positives.
inline void write_count_summary(std::ostream& os, const CountReport& report, std::span<const std::string> category_names) {
    char buf[128];
    const long total = report.true_total();
    for (std::size_t c = 1; c < report.n_categories; ++c) {
        long t = 0;
        for (const auto& s : report.series) t += s.truth[c - 1];
        if (t > 0)
            std::snprintf(buf, sizeof buf, "%-24s shots %6ld  E %6.2f%%\n", category_names[c].c_str(), t, 100.0 * category_error_rate(report, c));
        else
            std::snprintf(buf, sizeof buf, "%-24s shots %6ld  E    n/a\n", category_names[c].c_str(), t);
        os << buf;
    }
    if (total > 0) {
        std::snprintf(buf, sizeof buf, "%-24s shots %6ld  E %6.2f%%\n", "all", total, 100.0 * error_rate(report));
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "%-24s series %5zu  false positives %ld\n", "non-shot only", report.shot_free_series(),
                  report.false_positives());
    os << buf;
}

// ---------------------------------------------------------------------------
// Ablation

struct Rung {
    std::string name;
    Improvements improvements;
};

/// base, then each improvement added on top of all previous ones.
inline std::vector<Rung> ablation_rungs() {
    Improvements imp{false, false, false, false, false, false};
    std::vector<Rung> rungs{{"base", imp}};
    imp.pretrain = true;
    rungs.push_back({"+pretrain", imp});
    imp.zero_loss = true;
    rungs.push_back({"+zero_loss", imp});
    imp.relu6 = true;
    rungs.push_back({"+relu6", imp});
    imp.post_filter = true;
    rungs.push_back({"+post_filter", imp});
    imp.learned_post_filter = true;
    rungs.push_back({"+learned_post_filter", imp});
    imp.vat = true;
    rungs.push_back({"+vat", imp});
    return rungs;
}

/// Linear-interpolation quantile of a sample (q in [0, 1]).
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct RungResult {
    std::string name;
    std::vector<std::uint64_t> seeds;
    std::vector<double> error_rates;  // validation E per seed, non-converged = 1
    [[nodiscard]] double median() const { return quantile(error_rates, 0.5); }
};

struct AblationReport {
    std::vector<RungResult> rungs;

    /// Incremental steps whose median E did not increase.
    [[nodiscard]] int non_increasing_steps() const {
        int n = 0;
        for (std::size_t i = 1; i < rungs.size(); ++i) n += rungs[i].median() <= rungs[i - 1].median();
        return n;
    }
};

/// Trains `seeds` networks per rung with paired seeds (seed k is the same in every rung).
inline AblationReport ablation_report(const NetworkConfig& network, const SplitData& target, const SplitData* pretrain,
                                      const TrainConfig& base, std::size_t seeds = 20, std::span<const Rung> rungs = {}) {
    const auto ladder = rungs.empty() ? ablation_rungs() : std::vector<Rung>(rungs.begin(), rungs.end());
    AblationReport report;
    for (const auto& rung : ladder) {
        TrainConfig cfg = base;
        cfg.improvements = rung.improvements;
        RungResult rr{rung.name, {}, std::vector<double>(seeds)};
        for (std::size_t k = 0; k < seeds; ++k) rr.seeds.push_back(derive_seed(base.seed, 100 + k));
        parallel_for(seeds, cfg.threads, [&](std::size_t k) {
            rr.error_rates[k] = train_seed(network, target, pretrain, cfg, rr.seeds[k]).error_rate();
        });
        report.rungs.push_back(std::move(rr));
    }
    return report;
}

/// One row per (rung, seed).
inline void write_ablation_csv(std::ostream& os, const AblationReport& report) {
    os << "rung,seed,error_rate\n";
    for (const auto& r : report.rungs)
        for (std::size_t k = 0; k < r.error_rates.size(); ++k) os << r.name << ',' << r.seeds[k] << ',' << r.error_rates[k] << '\n';
}

/// Box-plot quantiles per rung.
inline void write_ablation_quantiles(std::ostream& os, const AblationReport& report) {
    os << "rung,min,q25,median,q75,max\n";
    for (const auto& r : report.rungs)
        os << r.name << ',' << quantile(r.error_rates, 0.0) << ',' << quantile(r.error_rates, 0.25) << ',' << r.median() << ','
           << quantile(r.error_rates, 0.75) << ',' << quantile(r.error_rates, 1.0) << '\n';
}

}  // namespace edgar
