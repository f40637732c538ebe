#pragma once

// Virtual adversarial training.
//
// The adversarial direction comes from K power iterations on the KL
// divergence between the clean prediction and a prediction at x + xi * d.
// The loss alpha * KL(f(x) || f(x + eps * d)) treats f(x) and d as constants.

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgar/network.hpp"
#include "edgar/proportion.hpp"
#include "edgar/random.hpp"

namespace edgar {

struct VatConfig {
    double epsilon = 5.0;  // perturbation L2 norm, g
    double xi = 1e-6;      // finite-difference probe size
    int power_iterations = 1;
    double alpha = 1.0;

    void validate() const {
        if (epsilon < 0.0) throw std::invalid_argument("VAT epsilon must be >= 0");
        if (!(xi > 0.0)) throw std::invalid_argument("VAT xi must be > 0");
        if (power_iterations < 1) throw std::invalid_argument("VAT needs at least one power iteration");
    }
};

/// Scratch buffers reused across candidates.
struct VatWorkspace {
    ForwardRecord<double> rec;
    std::vector<double> shifted;
    std::vector<double> d;
    std::vector<double> dx;
    std::vector<double> dlogits;
};

/// Adversarial perturbation eps * d for input `x` whose clean prediction is `p_clean`.
/// The result is all zeros when eps is 0 or the probe gradient vanishes.
inline std::vector<double> vat_perturbation(const NetworkLayout& layout, std::span<const double> params, std::span<const double> x,
                                            std::span<const double> p_clean, const VatConfig& cfg, Rng& rng, VatWorkspace& ws,
                                            const ActivationQuant* quant = nullptr) {
    cfg.validate();
    const std::size_t n = x.size();
    ws.d.resize(n);
    ws.shifted.resize(n);
    ws.dx.resize(n);
    ws.dlogits.resize(layout.n_outputs);
    for (auto& v : ws.d) v = normal(rng);
    auto normalize = [](std::vector<double>& v) {
        const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        if (norm > 0.0 && std::isfinite(norm))
            for (auto& e : v) e /= norm;
        else
            std::fill(v.begin(), v.end(), 0.0);
    };
    normalize(ws.d);
    for (int it = 0; it < cfg.power_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) ws.shifted[i] = x[i] + cfg.xi * ws.d[i];
        forward<double>(layout, params, ws.shifted, ws.rec, quant);
        // d KL(p || softmax(z)) / dz = softmax(z) - p
        for (std::size_t c = 0; c < layout.n_outputs; ++c) ws.dlogits[c] = ws.rec.probs[c] - p_clean[c];
        backward<double>(layout, params, ws.rec, ws.dlogits, {}, ws.dx);
        ws.d = ws.dx;  // the xi factor of the chain rule vanishes in the normalization
        normalize(ws.d);
    }
    std::vector<double> r_adv(n);
    for (std::size_t i = 0; i < n; ++i) r_adv[i] = cfg.epsilon * ws.d[i];
    return r_adv;
}

/// alpha * KL(p_clean || f(x + r_adv)) for a fixed perturbation; accumulates
/// `grad_scale` times its parameter gradient into `grad` when non-empty.
inline double vat_loss_fixed(const NetworkLayout& layout, std::span<const double> params, std::span<const double> x,
                             std::span<const double> r_adv, std::span<const double> p_clean, double alpha, VatWorkspace& ws,
                             std::span<double> grad = {}, double grad_scale = 1.0, const ActivationQuant* quant = nullptr) {
    ws.shifted.resize(x.size());
    ws.dlogits.resize(layout.n_outputs);
    for (std::size_t i = 0; i < x.size(); ++i) ws.shifted[i] = x[i] + r_adv[i];
    forward<double>(layout, params, ws.shifted, ws.rec, quant);
    const double loss = alpha * kl_divergence(p_clean, ws.rec.probs);
    if (!grad.empty()) {
        for (std::size_t c = 0; c < layout.n_outputs; ++c) ws.dlogits[c] = grad_scale * alpha * (ws.rec.probs[c] - p_clean[c]);
        backward<double>(layout, params, ws.rec, ws.dlogits, grad);
    }
    return loss;
}

/// Full VAT term for one candidate: computes the clean prediction, the
/// adversarial direction and the loss (with its parameter gradient).
inline double vat_loss(const NetworkLayout& layout, std::span<const double> params, std::span<const double> x, const VatConfig& cfg,
                       Rng& rng, std::span<double> grad = {}, double grad_scale = 1.0) {
    VatWorkspace ws;
    ForwardRecord<double> clean;
    forward<double>(layout, params, x, clean);
    const std::vector<double> p = clean.probs;
    const auto r_adv = vat_perturbation(layout, params, x, p, cfg, rng, ws);
    return vat_loss_fixed(layout, params, x, r_adv, p, cfg.alpha, ws, grad, grad_scale);
}

}  // namespace edgar
