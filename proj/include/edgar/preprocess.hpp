#pragma once

// Rolling-energy metric and hysteresis-gated candidate extraction.
//
// The metric at sample t is
//
//     m[t] = (1/w) * sum_{i=-floor(w/2)}^{floor(w/2)} a[t + i + o]^2
//
// with samples outside the series read as zero. For even w the sum spans w + 1
// samples while the divisor stays w; thresholds are tuned against this exact
// definition. RollingEnergy and HysteresisGate are shared with the streaming
// detector so that offline and online candidates are bit-identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgar/signal.hpp"

namespace edgar {

struct MetricConfig {
    std::size_t window = 32;  // w; 5 ms at 6400 Hz
    std::int64_t offset = 0;  // o
    double high_threshold = 2.0;  // T_H, g^2
    double low_threshold = 0.5;   // T_L, g^2
    std::size_t input_len = 232;  // |x|
    std::size_t pre_trigger = 32;  // slice samples before the trigger index

    [[nodiscard]] std::size_t half_window() const noexcept { return window / 2; }
    [[nodiscard]] std::size_t span() const noexcept { return 2 * half_window() + 1; }
    /// Samples the metric lags behind the newest input: m[t] is final once a[t + lead] is known.
    [[nodiscard]] std::size_t lead() const noexcept {
        return static_cast<std::size_t>(static_cast<std::int64_t>(half_window()) + offset);
    }
    /// Samples after the trigger index the slice extends to.
    [[nodiscard]] std::size_t post_trigger() const noexcept { return input_len - pre_trigger - 1; }

    void validate() const {
        if (window < 1) throw std::invalid_argument("metric window must be >= 1");
        if (offset < -static_cast<std::int64_t>(half_window()))
            throw std::invalid_argument("metric offset must be >= -floor(w/2) so the metric is causal");
        if (!(low_threshold > 0.0)) throw std::invalid_argument("low threshold must be positive");
        if (high_threshold < low_threshold) throw std::invalid_argument("high threshold must be >= low threshold");
        if (input_len < 1) throw std::invalid_argument("candidate input length must be >= 1");
        if (pre_trigger >= input_len) throw std::invalid_argument("pre_trigger must be < input_len");
    }
};

/// Sum of the last span() squared samples, kept as an unevaluated double-double
/// pair so that long streams do not accumulate cancellation error. Squares of
/// float samples are exact in double, so additions and removals cancel exactly
/// up to the 106-bit accumulator precision.
class RollingEnergy {
public:
    RollingEnergy() = default;
    explicit RollingEnergy(std::size_t span) : squares_(span, 0.0) {}

    /// Adds a new sample and returns the windowed sum of squares ending at it.
    double push(float sample) {
        const double sq = static_cast<double>(sample) * static_cast<double>(sample);
        add(-squares_[pos_]);
        add(sq);
        squares_[pos_] = sq;
        if (++pos_ == squares_.size()) pos_ = 0;
        return hi_ + lo_;
    }

    void reset() {
        std::fill(squares_.begin(), squares_.end(), 0.0);
        pos_ = 0;
        hi_ = lo_ = 0.0;
    }

    [[nodiscard]] std::size_t span() const noexcept { return squares_.size(); }

private:
    void add(double x) {
        const double s = hi_ + x;
        const double bb = s - hi_;
        const double err = (hi_ - (s - bb)) + (x - bb);
        const double lo = lo_ + err;
        hi_ = s + lo;
        lo_ = lo - (hi_ - s);
    }

    std::vector<double> squares_;
    std::size_t pos_ = 0;
    double hi_ = 0.0;
    double lo_ = 0.0;
};

/// Fires once when the metric reaches T_H, then re-arms only after it dips below T_L.
class HysteresisGate {
public:
    HysteresisGate() = default;
    HysteresisGate(double high, double low) : high_(high), low_(low) {}

    bool update(double m) noexcept {
        if (m < low_) {
            armed_ = true;
            return false;
        }
        if (armed_ && m >= high_) {
            armed_ = false;
            return true;
        }
        return false;
    }

    [[nodiscard]] bool armed() const noexcept { return armed_; }
    void reset() noexcept { armed_ = true; }

private:
    double high_ = 0.0;
    double low_ = 0.0;
    bool armed_ = true;
};

/// Offline metric, one value per input sample.
inline std::vector<double> compute_metric(std::span<const float> samples, const MetricConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw std::invalid_argument("compute_metric: empty series");
    const std::size_t n = samples.size();
    const std::size_t lead = cfg.lead();
    const double inv_w = 1.0 / static_cast<double>(cfg.window);
    RollingEnergy energy(cfg.span());
    std::vector<double> metric(n);
    // Feeding sample k completes m[k - lead]; samples past the end are zero.
    for (std::size_t k = 0; k < n + lead; ++k) {
        const double sum = energy.push(k < n ? samples[k] : 0.0f);
        if (k >= lead) metric[k - lead] = sum * inv_w;
    }
    return metric;
}

inline std::vector<double> compute_metric(const TimeSeries& series, const MetricConfig& cfg) {
    return compute_metric(std::span<const float>(series.samples), cfg);
}

struct Candidate {
    std::vector<float> x;
    double t = 0.0;            // trigger timestamp, seconds
    std::size_t trigger = 0;   // trigger sample index
    std::int64_t start = 0;    // first slice sample (negative when zero-padded)
    std::string series_id;
};

/// Copies samples [start, start + out.size()) into `out`, reading zeros outside the series.
inline void copy_slice(std::span<const float> samples, std::int64_t start, std::span<float> out) {
    const auto n = static_cast<std::int64_t>(samples.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::int64_t k = start + static_cast<std::int64_t>(i);
        out[i] = (k >= 0 && k < n) ? samples[static_cast<std::size_t>(k)] : 0.0f;
    }
}

/// Trigger indices produced by the hysteresis gate over a metric sequence.
inline std::vector<std::size_t> trigger_indices(std::span<const double> metric, double high, double low) {
    HysteresisGate gate(high, low);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < metric.size(); ++k)
        if (gate.update(metric[k])) out.push_back(k);
    return out;
}

inline std::vector<Candidate> generate_candidates(const TimeSeries& series, std::span<const double> metric, const MetricConfig& cfg) {
    cfg.validate();
    if (metric.size() != series.samples.size()) throw std::invalid_argument("generate_candidates: metric/series length mismatch");
    std::vector<Candidate> out;
    for (std::size_t k : trigger_indices(metric, cfg.high_threshold, cfg.low_threshold)) {
        Candidate c;
        c.trigger = k;
        c.t = static_cast<double>(k) / series.sample_rate_hz;
        c.start = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(cfg.pre_trigger);
        c.x.resize(cfg.input_len);
        copy_slice(series.samples, c.start, c.x);
        c.series_id = series.series_id;
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<Candidate> extract_candidates(const TimeSeries& series, const MetricConfig& cfg) {
    const auto metric = compute_metric(series, cfg);
    return generate_candidates(series, metric, cfg);
}

/// Candidate slices re-packed as dataset records, for inspection with the dataset tooling.
inline Dataset candidates_to_dataset(std::span<const Candidate> candidates, double sample_rate_hz,
                                     std::vector<std::string> category_names = {"non-shot", "shot"}) {
    Dataset ds;
    ds.category_names = std::move(category_names);
    for (const auto& c : candidates) {
        Recording rec;
        rec.series.samples = c.x;
        rec.series.sample_rate_hz = sample_rate_hz;
        rec.series.series_id = c.series_id + "@" + std::to_string(c.trigger);
        rec.series.bin_key = {{"source", c.series_id}, {"trigger", std::to_string(c.trigger)}};
        rec.label.counts.assign(ds.category_names.size() - 1, 0);
        ds.recordings.push_back(std::move(rec));
    }
    return ds;
}

}  // namespace edgar
