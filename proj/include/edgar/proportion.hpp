#pragma once

// Bag-level targets and the proportion loss.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgar/signal.hpp"

namespace edgar {

inline constexpr double log_clamp = 1e-12;

/// Thrown when a recording holds more counted events than candidates, i.e. the
/// metric missed events and the recording cannot be expressed as proportions.
struct unusable_recording : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Category proportions of one recording; component 0 is the non-shot remainder.
struct ProportionTarget {
    std::vector<double> p;
};

inline ProportionTarget build_target(const WeakLabel& label, std::size_t n_candidates) {
    if (n_candidates < 1) throw std::invalid_argument("build_target: recording has no candidates");
    label.validate();
    const int total = label.total();
    if (static_cast<std::size_t>(total) > n_candidates)
        throw unusable_recording(std::to_string(total) + " counted events but only " + std::to_string(n_candidates) + " candidates");
    ProportionTarget target;
    target.p.resize(label.n_categories());
    const double n = static_cast<double>(n_candidates);
    double shots = 0.0;
    for (std::size_t i = 0; i < label.counts.size(); ++i) {
        target.p[i + 1] = static_cast<double>(label.counts[i]) / n;
        shots += target.p[i + 1];
    }
    target.p[0] = std::max(0.0, 1.0 - shots);
    return target;
}

/// Mean of the per-candidate probability vectors.
inline std::vector<double> aggregate(std::span<const std::vector<double>> preds) {
    if (preds.empty()) throw std::invalid_argument("aggregate: no predictions");
    std::vector<double> mean(preds.front().size(), 0.0);
    for (const auto& v : preds) {
        if (v.size() != mean.size()) throw std::invalid_argument("aggregate: inconsistent vector sizes");
        for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
    }
    const double inv = 1.0 / static_cast<double>(preds.size());
    for (auto& m : mean) m *= inv;
    return mean;
}

/// -sum p log p_hat, plus sum p log p when `zero_loss` (making it KL(p || p_hat)).
/// Uses 0 log 0 = 0 and clamps p_hat to log_clamp before the log.
inline double proportion_loss(std::span<const double> p, std::span<const double> p_hat, bool zero_loss) {
    if (p.size() != p_hat.size()) throw std::invalid_argument("proportion_loss: size mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        loss -= p[i] * std::log(std::max(p_hat[i], log_clamp));
        if (zero_loss) loss += p[i] * std::log(p[i]);
    }
    return loss;
}

/// d(proportion_loss)/d(p_hat). The zero-loss term does not depend on p_hat.
inline std::vector<double> proportion_loss_grad(std::span<const double> p, std::span<const double> p_hat) {
    std::vector<double> g(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0 && p_hat[i] > log_clamp) g[i] = -p[i] / p_hat[i];
    return g;
}

/// KL(p || q) with the same conventions.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) { return proportion_loss(p, q, true); }

}  // namespace edgar
