#pragma once

// Recording and weak-label types plus the binned learning/validation split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "edgar/random.hpp"

namespace edgar {

/// Settings of the external variables a recording was acquired under
/// (e.g. {"ammo": "live", "mount": "tripod"}). Recordings sharing a key share a bin.
using BinKey = std::map<std::string, std::string>;

inline std::string to_string(const BinKey& key) {
    std::string s;
    for (const auto& [k, v] : key) {
        if (!s.empty()) s += ',';
        s += k + '=' + v;
    }
    return s;
}

struct TimeSeries {
    std::vector<float> samples;  // acceleration in g
    double sample_rate_hz = 6400.0;
    std::string series_id;
    BinKey bin_key;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
    [[nodiscard]] double duration_s() const noexcept { return static_cast<double>(samples.size()) / sample_rate_hz; }

    void validate() const {
        if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
            throw std::invalid_argument("series '" + series_id + "': sample rate must be positive");
    }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;
};

/// Per-category event counts for one recording. Index i holds the count of
/// category i + 1; the non-shot category (0) is never counted.
struct WeakLabel {
    std::vector<int> counts;

    [[nodiscard]] std::size_t n_categories() const noexcept { return counts.size() + 1; }
    [[nodiscard]] int total() const noexcept { return std::accumulate(counts.begin(), counts.end(), 0); }

    void validate() const {
        if (counts.empty()) throw std::invalid_argument("weak label needs at least one countable category");
        for (int c : counts)
            if (c < 0) throw std::invalid_argument("weak label counts must be non-negative");
    }

    friend bool operator==(const WeakLabel&, const WeakLabel&) = default;
};

struct PlantedEvent {
    std::size_t onset = 0;  // sample index
    int category = 0;       // 0 = confuser (non-shot), i >= 1 = shot category i
    friend bool operator==(const PlantedEvent&, const PlantedEvent&) = default;
};

/// Instance-level truth known only for synthetic data; never used for training.
struct GroundTruth {
    std::vector<PlantedEvent> events;

    [[nodiscard]] std::vector<int> histogram(std::size_t n_categories) const {
        std::vector<int> counts(n_categories - 1, 0);
        for (const auto& e : events)
            if (e.category > 0 && static_cast<std::size_t>(e.category) < n_categories) ++counts[static_cast<std::size_t>(e.category) - 1];
        return counts;
    }

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Recording {
    TimeSeries series;
    WeakLabel label;
    std::optional<GroundTruth> truth;

    friend bool operator==(const Recording&, const Recording&) = default;
};

struct Dataset {
    std::vector<std::string> category_names{"non-shot", "shot"};
    std::vector<Recording> recordings;

    [[nodiscard]] std::size_t n_categories() const noexcept { return category_names.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return recordings.size(); }

    [[nodiscard]] int total_shots() const {
        int total = 0;
        for (const auto& r : recordings) total += r.label.total();
        return total;
    }

    void validate() const {
        if (category_names.size() < 2) throw std::invalid_argument("dataset needs at least two categories");
        for (const auto& r : recordings) {
            r.series.validate();
            r.label.validate();
            if (r.label.n_categories() != n_categories())
                throw std::invalid_argument("series '" + r.series.series_id + "': label has " + std::to_string(r.label.n_categories()) +
                                            " categories, dataset has " + std::to_string(n_categories()));
        }
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetSplit {
    Dataset learning;
    Dataset validation;
};

/// Number of recordings of a bin that go to validation: the fraction of the
/// bin, rounded up. The epsilon absorbs representation error in products like
/// 0.1 * 30 so an exact multiple is not pushed to the next integer.
inline std::size_t validation_share(std::size_t bin_size, double fraction) {
    const double exact = fraction * static_cast<double>(bin_size);
    const auto n = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    return std::min(n, bin_size);
}

/// Splits per bin: a shuffled ceil(fraction * bin size) of every bin goes to validation.
/// Recordings keep their original relative order inside each output.
inline DatasetSplit split_dataset(const Dataset& dataset, double fraction = 0.10, std::uint64_t seed = 0) {
    if (dataset.recordings.empty()) throw std::invalid_argument("split_dataset: empty dataset");
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split_dataset: fraction must lie in (0, 1)");

    std::map<BinKey, std::vector<std::size_t>> bins;
    for (std::size_t i = 0; i < dataset.recordings.size(); ++i) bins[dataset.recordings[i].series.bin_key].push_back(i);

    std::vector<bool> to_validation(dataset.recordings.size(), false);
    Rng rng(seed);
    for (auto& [key, members] : bins) {
        shuffle(std::span(members), rng);
        const std::size_t n_val = validation_share(members.size(), fraction);
        for (std::size_t k = 0; k < n_val; ++k) to_validation[members[k]] = true;
    }

    DatasetSplit split;
    split.learning.category_names = dataset.category_names;
    split.validation.category_names = dataset.category_names;
    for (std::size_t i = 0; i < dataset.recordings.size(); ++i)
        (to_validation[i] ? split.validation : split.learning).recordings.push_back(dataset.recordings[i]);
    return split;
}

/// Concatenates datasets that share the same category list.
inline Dataset merge_datasets(std::span<const Dataset> parts) {
    if (parts.empty()) throw std::invalid_argument("merge_datasets: nothing to merge");
    Dataset merged;
    merged.category_names = parts.front().category_names;
    for (const auto& part : parts) {
        if (part.category_names != merged.category_names) throw std::invalid_argument("merge_datasets: category lists differ");
        merged.recordings.insert(merged.recordings.end(), part.recordings.begin(), part.recordings.end());
    }
    return merged;
}

}  // namespace edgar
