#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "edgar/edgar.hpp"

namespace testutil {

inline edgar::Recording make_recording(std::string id, edgar::BinKey key, std::vector<int> counts, std::size_t n = 64,
                                       std::uint64_t seed = 1) {
    edgar::Recording r;
    r.series.series_id = std::move(id);
    r.series.bin_key = std::move(key);
    edgar::Rng rng(seed);
    r.series.samples.resize(n);
    for (auto& s : r.series.samples) s = static_cast<float>(edgar::normal(rng));
    r.label.counts = std::move(counts);
    return r;
}

/// Dataset with the given bin sizes; bin b is keyed {"bin": b}.
inline edgar::Dataset binned_dataset(const std::vector<std::size_t>& bin_sizes) {
    edgar::Dataset ds;
    std::size_t k = 0;
    for (std::size_t b = 0; b < bin_sizes.size(); ++b)
        for (std::size_t i = 0; i < bin_sizes[b]; ++i, ++k)
            ds.recordings.push_back(make_recording("r" + std::to_string(k), {{"bin", std::to_string(b)}}, {static_cast<int>(i % 3)}, 16, k));
    return ds;
}

/// Small profile with one shot category and one confuser.
inline edgar::SynthProfile small_profile(std::size_t n_shot_categories = 1) {
    return edgar::reference_profile("test", n_shot_categories, 1.0, 3);
}

inline double rel_err(double a, double b, double floor = 1e-6) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}); }

/// Random tiny network: 1-2 conv blocks and a small dense layer.
inline edgar::NetworkConfig random_tiny_config(edgar::Rng& rng) {
    edgar::NetworkConfig cfg;
    cfg.input_len = static_cast<std::size_t>(edgar::uniform_int(rng, 20, 40));
    cfg.conv.clear();
    const auto blocks = edgar::uniform_int(rng, 1, 2);
    for (std::int64_t b = 0; b < blocks; ++b)
        cfg.conv.push_back({static_cast<std::size_t>(edgar::uniform_int(rng, 2, 5)), static_cast<std::size_t>(edgar::uniform_int(rng, 2, 4)),
                            static_cast<std::size_t>(edgar::uniform_int(rng, 1, 2))});
    cfg.hidden = static_cast<std::size_t>(edgar::uniform_int(rng, 3, 6));
    cfg.n_categories = static_cast<std::size_t>(edgar::uniform_int(rng, 2, 3));
    cfg.activation_clip = edgar::uniform01(rng) < 0.5 ? 6.0 : 0.0;
    return cfg;
}

// Literal replay of the duplicate-removal pseudo-code: walk the candidates in
// time order, recompute each (masked) prediction's argmax, and let every
// surviving shot mask the candidates inside its window.
inline std::pair<std::vector<std::vector<double>>, std::vector<bool>> algorithm_replay(const std::vector<std::vector<double>>& y,
                                                                                  const std::vector<double>& t, double t_m) {
    const std::size_t n = y.size();
    std::vector<bool> m(n, true);
    std::vector<std::vector<double>> out = y;
    const std::size_t n_cat = y.empty() ? 2 : y[0].size();
    std::vector<double> e(n_cat, 0.0);
    e[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        // y'_i = m_i ? y_i : e
        const auto& yi = m[i] ? y[i] : e;
        std::size_t best = 0;
        for (std::size_t c = 1; c < n_cat; ++c)
            if (yi[c] > yi[best]) best = c;
        if (best == 0) continue;
        for (std::size_t j = 0; j < n; ++j)
            if (t[j] > t[i] && t[j] <= t[i] + t_m) m[j] = false;
    }
    for (std::size_t j = 0; j < n; ++j)
        if (!m[j]) out[j] = e;
    return {out, m};
}

inline std::vector<double> random_input(std::size_t n, edgar::Rng& rng, double scale = 1.0) {
    std::vector<double> x(n);
    for (auto& v : x) v = scale * edgar::normal(rng);
    return x;
}

}  // namespace testutil

namespace testutil {

struct FdResult {
    double max_rel = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // coordinates where the loss is not smooth at the step size (activation kinks)
};

/// Central finite differences of `loss(theta)` against `analytic`. A coordinate
/// that disagrees is retried with a smaller step; if the two numeric estimates
/// disagree with each other, or the left and right slopes differ (a max-pool
/// tie is a kink that central differences average over), the loss is not
/// smooth there and the coordinate is skipped rather than counted.
template <class Loss>
FdResult fd_check(Loss&& loss, std::vector<double> theta, const std::vector<double>& analytic, double eps = 1e-5, double floor = 1e-6,
                  double tol = 1e-4) {
    FdResult r;
    auto central = [&](std::size_t i, double h) {
        const double keep = theta[i];
        theta[i] = keep + h;
        const double up = loss(theta);
        theta[i] = keep - h;
        const double down = loss(theta);
        theta[i] = keep;
        return (up - down) / (2.0 * h);
    };
    auto kink = [&](std::size_t i, double h) {
        const double keep = theta[i];
        const double mid = loss(theta);
        theta[i] = keep + h;
        const double right = (loss(theta) - mid) / h;
        theta[i] = keep - h;
        const double left = (mid - loss(theta)) / h;
        theta[i] = keep;
        return rel_err(left, right, floor) > tol;
    };
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double n1 = central(i, eps);
        double e = rel_err(n1, analytic[i], floor);
        if (e >= tol) {
            const double n2 = central(i, eps / 16.0);
            const double e2 = rel_err(n2, analytic[i], floor);
            if (e2 < tol) {
                e = e2;
            } else if (rel_err(n1, n2, floor) > tol || kink(i, eps / 16.0)) {
                ++r.skipped;
                continue;
            }
        }
        r.max_rel = std::max(r.max_rel, e);
        ++r.checked;
    }
    return r;
}

}  // namespace testutil
