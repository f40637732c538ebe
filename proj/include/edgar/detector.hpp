#pragma once

// Sample-by-sample detector: rolling metric, hysteresis gate, slice capture,
// integer inference and the minimum-cycle-time window, in fixed memory.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgar/binary_io.hpp"
#include "edgar/dataset_io.hpp"
#include "edgar/post_filter.hpp"
#include "edgar/preprocess.hpp"
#include "edgar/quant.hpp"

namespace edgar {

struct DetectionEvent {
    std::size_t category = 1;
    double t = 0.0;           // trigger timestamp, seconds
    std::size_t trigger = 0;  // trigger sample index
    friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

struct DetectorReport {
    std::vector<long> counts;  // index i = category i + 1
    long candidates = 0;
    long inferences = 0;
    long suppressed = 0;  // candidates inside an open window, never inferred
    std::uint64_t samples = 0;
};

class StreamingDetector {
public:
    StreamingDetector() = default;

    StreamingDetector(const MetricConfig& metric, QuantizedModel model, double min_cycle_s, double sample_rate_hz = 6400.0)
        : cfg_(metric), model_(std::move(model)), min_cycle_(min_cycle_s), rate_(sample_rate_hz) {
        cfg_.validate();
        if (!(min_cycle_s >= 0.0)) throw std::invalid_argument("minimum cycle time must be >= 0");
        if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
        if (model_.layers.empty() || model_.layers.front().shape.in_len != cfg_.input_len)
            throw std::invalid_argument("model input length does not match the metric configuration");
        lead_ = cfg_.lead();
        post_ = cfg_.post_trigger();
        delay_ = std::max(lead_, post_);
        ring_.assign(std::max(cfg_.input_len, lead_ + cfg_.pre_trigger + 1), 0.0f);
        // Two triggers are at least two samples apart (the gate must dip below T_L in between).
        pending_.assign(delay_ / 2 + 2, 0);
        slice_.assign(cfg_.input_len, 0.0f);
        energy_ = RollingEnergy(cfg_.span());
        gate_ = HysteresisGate(cfg_.high_threshold, cfg_.low_threshold);
        scratch_ = QuantScratch(model_);
        counts_.assign(model_.config.n_categories - 1, 0);
        inv_w_ = 1.0 / static_cast<double>(cfg_.window);
        initialized_ = true;
    }

    /// Feeds one acceleration sample; returns an event when a shot is accepted.
    std::optional<DetectionEvent> push_sample(float a) {
        if (!initialized_) throw std::logic_error("StreamingDetector: push before initialization");
        if (finished_) throw std::logic_error("StreamingDetector: push after finish");
        return step(a, true);
    }

    /// Flushes the stream as if it were followed by zeros: completes the metric
    /// of the last real samples and processes the remaining candidates.
    std::vector<DetectionEvent> finish() {
        if (!initialized_) throw std::logic_error("StreamingDetector: finish before initialization");
        std::vector<DetectionEvent> events;
        if (finished_) return events;
        finished_ = true;
        for (std::size_t i = 0; i < delay_; ++i)
            if (auto e = step(0.0f, false)) events.push_back(*e);
        return events;
    }

    [[nodiscard]] DetectorReport report() const {
        return {std::vector<long>(counts_.begin(), counts_.end()), candidates_, inferences_, suppressed_, real_samples_};
    }

    /// Working memory owned by the detector, fixed at construction.
    [[nodiscard]] std::size_t scratch_bytes() const noexcept {
        return ring_.size() * sizeof(float) + pending_.size() * sizeof(std::uint64_t) + slice_.size() * sizeof(float) +
               cfg_.span() * sizeof(double) + scratch_.bytes() + counts_.size() * sizeof(long);
    }

    /// Samples between a trigger and the moment its candidate is classified.
    [[nodiscard]] std::size_t decision_delay() const noexcept { return delay_; }
    [[nodiscard]] bool initialized() const noexcept { return initialized_; }

private:
    std::optional<DetectionEvent> step(float a, bool real) {
        const std::uint64_t k = clock_++;
        ring_[k % ring_.size()] = a;
        if (real) ++real_samples_;
        const double m = energy_.push(a) * inv_w_;
        // m belongs to index k - lead; only indices inside the real stream can trigger.
        if (k >= lead_ && k - lead_ < real_samples_ && gate_.update(m)) {
            if (n_pending_ == pending_.size()) throw std::logic_error("StreamingDetector: pending trigger queue overflow");
            pending_[(head_ + n_pending_) % pending_.size()] = k - lead_;
            ++n_pending_;
        }
        if (n_pending_ > 0 && pending_[head_] + delay_ == k) {
            const std::uint64_t trigger = pending_[head_];
            head_ = (head_ + 1) % pending_.size();
            --n_pending_;
            return process(trigger);
        }
        return std::nullopt;
    }

    std::optional<DetectionEvent> process(std::uint64_t trigger) {
        ++candidates_;
        const double t = static_cast<double>(trigger) / rate_;
        if (has_accepted_ && t > last_accepted_ && t <= last_accepted_ + min_cycle_) {
            ++suppressed_;
            return std::nullopt;
        }
        const auto start = static_cast<std::int64_t>(trigger) - static_cast<std::int64_t>(cfg_.pre_trigger);
        for (std::size_t i = 0; i < slice_.size(); ++i) {
            const std::int64_t idx = start + static_cast<std::int64_t>(i);
            slice_[i] = (idx >= 0 && static_cast<std::uint64_t>(idx) < real_samples_) ? ring_[static_cast<std::uint64_t>(idx) % ring_.size()] : 0.0f;
        }
        ++inferences_;
        const auto probs = qforward(model_, slice_, scratch_);
        const std::size_t c = argmax(probs);
        if (c == 0) return std::nullopt;
        has_accepted_ = true;
        last_accepted_ = t;
        ++counts_[c - 1];
        return DetectionEvent{c, t, static_cast<std::size_t>(trigger)};
    }

    MetricConfig cfg_;
    QuantizedModel model_;
    double min_cycle_ = 0.040;
    double rate_ = 6400.0;
    std::size_t lead_ = 0, post_ = 0, delay_ = 0;
    double inv_w_ = 1.0;

    std::vector<float> ring_;
    std::vector<std::uint64_t> pending_;
    std::size_t head_ = 0, n_pending_ = 0;
    std::vector<float> slice_;
    RollingEnergy energy_;
    HysteresisGate gate_;
    QuantScratch scratch_;

    std::vector<long> counts_;
    long candidates_ = 0, inferences_ = 0, suppressed_ = 0;
    bool has_accepted_ = false;
    double last_accepted_ = 0.0;
    std::uint64_t clock_ = 0, real_samples_ = 0;
    bool initialized_ = false, finished_ = false;
};

/// Offline reference: extract candidates, classify each with qforward, then
/// apply the post-filter to the shot predictions.
struct OfflineDetections {
    std::vector<DetectionEvent> events;
    std::vector<std::size_t> triggers;
    std::size_t suppressed = 0;
};

inline OfflineDetections offline_detections(const TimeSeries& series, const MetricConfig& metric, const QuantizedModel& model,
                                            double min_cycle_s) {
    OfflineDetections out;
    const auto candidates = extract_candidates(series, metric);
    QuantScratch scratch(model);
    std::vector<ShotPrediction> shots;
    std::vector<double> times;
    for (const auto& c : candidates) {
        out.triggers.push_back(c.trigger);
        times.push_back(c.t);
        const std::size_t cat = argmax(qforward(model, c.x, scratch));
        if (cat != 0) shots.push_back({c.t, cat});
    }
    const auto kept = simple_post_filter(shots, min_cycle_s);
    out.suppressed = count_window_suppressed(times, kept, min_cycle_s);
    for (const auto& s : kept) {
        const auto it = std::find(times.begin(), times.end(), s.t);
        out.events.push_back({s.category, s.t, out.triggers[static_cast<std::size_t>(it - times.begin())]});
    }
    return out;
}

/// Runs a whole series through a fresh detector, including the final flush.
inline std::vector<DetectionEvent> replay(StreamingDetector& det, std::span<const float> samples) {
    std::vector<DetectionEvent> events;
    for (float a : samples)
        if (auto e = det.push_sample(a)) events.push_back(*e);
    for (const auto& e : det.finish()) events.push_back(e);
    return events;
}

// ---------------------------------------------------------------------------
// Stream replay files: "EDST", u32 version, f64 rate, u64 n, n x f32 samples.

inline constexpr std::uint32_t stream_format_version = 1;

struct StreamFile {
    double sample_rate_hz = 6400.0;
    std::vector<float> samples;
};

inline void write_stream(std::ostream& out, const StreamFile& s) {
    io::Writer w(out);
    w.bytes("EDST", 4);
    w.put<std::uint32_t>(stream_format_version);
    w.put<double>(s.sample_rate_hz);
    w.array(s.samples);
    w.check();
}

inline StreamFile read_stream(std::istream& in) {
    io::Reader r(in);
    r.expect_magic("EDST", "stream");
    if (const auto v = r.get<std::uint32_t>(); v != stream_format_version)
        throw version_error("stream format version " + std::to_string(v) + " is not supported (expected " +
                            std::to_string(stream_format_version) + ")");
    StreamFile s;
    s.sample_rate_hz = r.get<double>();
    if (!(s.sample_rate_hz > 0.0)) throw format_error("stream sample rate must be positive");
    s.samples = r.array<float>(std::size_t{1} << 34);
    return s;
}

inline void save_stream(const std::filesystem::path& path, const StreamFile& s) {
    write_atomically(path, [&](std::ostream& out) { write_stream(out, s); });
}

inline StreamFile load_stream(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return read_stream(in);
}

/// One "timestamp,category" line per event.
inline void write_event_log(std::ostream& os, std::span<const DetectionEvent> events, std::span<const std::string> category_names) {
    char buf[32];
    for (const auto& e : events) {
        std::snprintf(buf, sizeof buf, "%.6f", e.t);
        os << buf << ',' << (e.category < category_names.size() ? category_names[e.category] : std::to_string(e.category)) << '\n';
    }
}

}  // namespace edgar
