#pragma once

// Minimum-cycle-time exclusion window: the training-time mask over
// per-candidate predictions, and its inference-time counterpart over shots.
//
// A shot prediction at t opens the window (t, t + T_M]. Later shot
// predictions inside it are turned into non-shots, and a suppressed shot does
// not open a window of its own.

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgar/network.hpp"

namespace edgar {

struct MaskedPredictions {
    std::vector<std::vector<double>> preds;  // f'(x): raw prediction where kept, e where masked
    std::vector<bool> mask;                  // true = kept (takes part in backpropagation)
};

inline bool timestamps_sorted(std::span<const double> t) { return std::is_sorted(t.begin(), t.end()); }

/// Mask over candidates in time order. Candidates whose prediction argmax is a
/// shot category open an exclusion window unless already masked themselves.
inline std::vector<bool> duplicate_mask(std::span<const std::vector<double>> preds, std::span<const double> timestamps,
                                        double min_cycle) {
    if (preds.size() != timestamps.size()) throw std::invalid_argument("duplicate_mask: size mismatch");
    if (!timestamps_sorted(timestamps)) throw std::invalid_argument("duplicate_mask: timestamps must be sorted ascending");
    std::vector<bool> mask(preds.size(), true);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!mask[i] || argmax(preds[i]) == 0) continue;
        const double end = timestamps[i] + min_cycle;
        for (std::size_t j = i + 1; j < preds.size() && timestamps[j] <= end; ++j)
            if (timestamps[j] > timestamps[i]) mask[j] = false;
    }
    return mask;
}

inline MaskedPredictions mask_duplicates(std::span<const std::vector<double>> preds, std::span<const double> timestamps,
                                         double min_cycle) {
    MaskedPredictions out;
    out.mask = duplicate_mask(preds, timestamps, min_cycle);
    out.preds.assign(preds.begin(), preds.end());
    for (std::size_t j = 0; j < preds.size(); ++j) {
        if (out.mask[j]) continue;
        std::fill(out.preds[j].begin(), out.preds[j].end(), 0.0);
        out.preds[j][0] = 1.0;
    }
    return out;
}

struct ShotPrediction {
    double t = 0.0;
    std::size_t category = 1;
    friend bool operator==(const ShotPrediction&, const ShotPrediction&) = default;
};

/// Keeps a shot, drops later shots inside its window; kept shots reopen windows.
inline std::vector<ShotPrediction> simple_post_filter(std::span<const ShotPrediction> shots, double min_cycle) {
    std::vector<ShotPrediction> kept;
    for (std::size_t i = 0; i < shots.size(); ++i) {
        if (i > 0 && shots[i].t < shots[i - 1].t) throw std::invalid_argument("simple_post_filter: timestamps must be sorted ascending");
        if (!kept.empty() && shots[i].t > kept.back().t && shots[i].t <= kept.back().t + min_cycle) continue;
        kept.push_back(shots[i]);
    }
    return kept;
}

/// Shot predictions (argmax != 0) from per-candidate probability vectors.
inline std::vector<ShotPrediction> shot_predictions(std::span<const std::vector<double>> preds, std::span<const double> timestamps) {
    std::vector<ShotPrediction> shots;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (const auto c = argmax(preds[i]); c != 0) shots.push_back({timestamps[i], c});
    return shots;
}

/// Candidates falling inside the window of a kept shot.
inline std::size_t count_window_suppressed(std::span<const double> candidate_times, std::span<const ShotPrediction> kept,
                                           double min_cycle) {
    std::size_t suppressed = 0;
    std::size_t k = 0;
    for (double t : candidate_times) {
        while (k + 1 < kept.size() && kept[k + 1].t < t) ++k;
        if (!kept.empty() && t > kept[k].t && t <= kept[k].t + min_cycle) ++suppressed;
    }
    return suppressed;
}

/// Estimated per-category counts (index i = category i + 1) for one recording.
inline std::vector<int> count_shots(std::span<const std::vector<double>> preds, std::span<const double> timestamps,
                                    std::size_t n_categories, bool post_filter, double min_cycle) {
    std::vector<int> counts(n_categories - 1, 0);
    auto shots = shot_predictions(preds, timestamps);
    if (post_filter) shots = simple_post_filter(shots, min_cycle);
    for (const auto& s : shots) ++counts.at(s.category - 1);
    return counts;
}

}  // namespace edgar
