#pragma once

// Synthetic accelerometer recordings with planted shots and confuser events.
//
// Every event is a sum of decaying sinusoids: a sharp first component followed
// by delayed mechanical sub-events. Confusers come from the same family at
// different energy and timing, so the energy metric alone cannot tell them apart.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgar/random.hpp"
#include "edgar/signal.hpp"

namespace edgar {

struct Oscillation {
    double delay_ms = 0.0;  // relative to the event onset
    double delay_jitter_ms = 0.0;
    double amplitude = 1.0;  // relative to the event amplitude
    double frequency_hz = 1000.0;
    double decay_ms = 2.0;  // exponential time constant
};

struct EventTemplate {
    std::string name;
    double amplitude_min = 5.0;  // g
    double amplitude_max = 10.0;
    std::vector<Oscillation> components;
};

struct SynthProfile {
    std::string name = "default";
    std::vector<EventTemplate> shots;      // shots[i] plants category i + 1
    std::vector<EventTemplate> confusers;  // non-shot events (falls, manipulations)
    double noise_sigma = 0.05;             // g
    double min_cycle_ms = 55.0;            // hard floor between consecutive onsets
    double max_cycle_ms = 90.0;
    int burst_min_rounds = 3;
    int burst_max_rounds = 6;
    double amplitude_jitter = 0.10;  // relative sd of per-component amplitude
    double frequency_jitter = 0.03;  // relative sd of per-component frequency
    std::uint64_t seed = 0;

    void validate() const {
        if (!(min_cycle_ms > 0.0)) throw std::invalid_argument("profile '" + name + "': min cycle time must be positive");
        if (max_cycle_ms < min_cycle_ms) throw std::invalid_argument("profile '" + name + "': max cycle below min cycle");
        if (noise_sigma < 0.0) throw std::invalid_argument("profile '" + name + "': negative noise sigma");
        if (burst_min_rounds < 1 || burst_max_rounds < burst_min_rounds)
            throw std::invalid_argument("profile '" + name + "': bad burst length range");
        auto check = [&](const EventTemplate& t) {
            if (!(t.amplitude_min > 0.0) || t.amplitude_max < t.amplitude_min)
                throw std::invalid_argument("profile '" + name + "', template '" + t.name + "': amplitude range must be positive");
            if (t.components.empty()) throw std::invalid_argument("template '" + t.name + "' has no components");
            for (const auto& c : t.components)
                if (!(c.decay_ms > 0.0) || !(c.frequency_hz > 0.0) || c.delay_ms < 0.0)
                    throw std::invalid_argument("template '" + t.name + "': invalid component");
        };
        for (const auto& t : shots) check(t);
        for (const auto& t : confusers) check(t);
    }
};

enum class EventKind { shot, confuser };

struct PlannedEvent {
    EventKind kind = EventKind::shot;
    std::size_t index = 1;  // shot category (>= 1) or confuser template index
    double gap_ms = 0.0;    // from the previous onset, or from the start for the first event
};

struct ShootingPlan {
    std::vector<PlannedEvent> events;
    double lead_in_ms = 100.0;  // quiet time before the first gap starts counting
    double tail_ms = 200.0;

    ShootingPlan& shot(std::size_t category, double gap_ms) {
        events.push_back({EventKind::shot, category, gap_ms});
        return *this;
    }
    ShootingPlan& confuser(std::size_t which, double gap_ms) {
        events.push_back({EventKind::confuser, which, gap_ms});
        return *this;
    }
    /// Appends `rounds` shots; the first follows `lead_gap_ms` after the previous event.
    ShootingPlan& burst(std::size_t category, int rounds, double cycle_ms, double lead_gap_ms) {
        for (int r = 0; r < rounds; ++r) shot(category, r == 0 ? lead_gap_ms : cycle_ms);
        return *this;
    }
};

struct SynthesizedSeries {
    TimeSeries series;
    WeakLabel label;
    GroundTruth truth;
};

namespace detail {

inline std::size_t ms_to_samples_ceil(double ms, double rate_hz) {
    return static_cast<std::size_t>(std::ceil(ms * rate_hz / 1000.0 - 1e-9));
}

inline void add_event(std::vector<double>& signal, std::size_t onset, const EventTemplate& tmpl, const SynthProfile& profile,
                      double rate_hz, Rng& rng) {
    const double amplitude = uniform(rng, tmpl.amplitude_min, tmpl.amplitude_max);
    for (const auto& comp : tmpl.components) {
        const double delay = std::max(0.0, comp.delay_ms + comp.delay_jitter_ms * (2.0 * uniform01(rng) - 1.0));
        const double amp = amplitude * comp.amplitude * std::max(0.05, 1.0 + profile.amplitude_jitter * normal(rng));
        const double freq = comp.frequency_hz * std::max(0.2, 1.0 + profile.frequency_jitter * normal(rng));
        const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const std::size_t start = onset + static_cast<std::size_t>(std::llround(delay * rate_hz / 1000.0));
        const auto length = static_cast<std::size_t>(std::ceil(8.0 * comp.decay_ms * rate_hz / 1000.0));
        const double tau_s = comp.decay_ms / 1000.0;
        for (std::size_t k = 0; k < length && start + k < signal.size(); ++k) {
            const double t = static_cast<double>(k) / rate_hz;
            signal[start + k] += amp * std::exp(-t / tau_s) * std::sin(2.0 * std::numbers::pi * freq * t + phase);
        }
    }
}

}  // namespace detail

/// Renders one recording of `plan` under `profile`. Deterministic in (profile.seed, seed).
inline SynthesizedSeries synthesize_series(const SynthProfile& profile, const ShootingPlan& plan, std::uint64_t seed,
                                           double sample_rate_hz = 6400.0) {
    profile.validate();
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("synthesize_series: sample rate must be positive");
    if (plan.lead_in_ms < 0.0 || plan.tail_ms < 0.0) throw std::invalid_argument("synthesize_series: negative lead-in or tail");

    std::vector<std::size_t> onsets;
    std::size_t cursor = detail::ms_to_samples_ceil(plan.lead_in_ms, sample_rate_hz);
    for (std::size_t i = 0; i < plan.events.size(); ++i) {
        const auto& ev = plan.events[i];
        if (i > 0 && ev.gap_ms < profile.min_cycle_ms)
            throw std::invalid_argument("plan event " + std::to_string(i) + ": gap of " + std::to_string(ev.gap_ms) +
                                        " ms violates the profile's minimum cycle time of " + std::to_string(profile.min_cycle_ms) + " ms");
        if (ev.gap_ms < 0.0) throw std::invalid_argument("plan event " + std::to_string(i) + ": negative gap");
        if (ev.kind == EventKind::shot && (ev.index < 1 || ev.index > profile.shots.size()))
            throw std::invalid_argument("plan event " + std::to_string(i) + ": shot category " + std::to_string(ev.index) +
                                        " has no template in profile '" + profile.name + "'");
        if (ev.kind == EventKind::confuser && ev.index >= profile.confusers.size())
            throw std::invalid_argument("plan event " + std::to_string(i) + ": confuser " + std::to_string(ev.index) +
                                        " has no template in profile '" + profile.name + "'");
        cursor += detail::ms_to_samples_ceil(ev.gap_ms, sample_rate_hz);
        onsets.push_back(cursor);
    }
    const std::size_t n = cursor + detail::ms_to_samples_ceil(plan.tail_ms, sample_rate_hz) + 1;

    Rng rng(derive_seed(seed, profile.seed));
    std::vector<double> signal(n);
    for (auto& s : signal) s = profile.noise_sigma * normal(rng);

    SynthesizedSeries out;
    out.label.counts.assign(profile.shots.size(), 0);
    for (std::size_t i = 0; i < plan.events.size(); ++i) {
        const auto& ev = plan.events[i];
        const auto& tmpl = ev.kind == EventKind::shot ? profile.shots[ev.index - 1] : profile.confusers[ev.index];
        detail::add_event(signal, onsets[i], tmpl, profile, sample_rate_hz, rng);
        const int category = ev.kind == EventKind::shot ? static_cast<int>(ev.index) : 0;
        out.truth.events.push_back({onsets[i], category});
        if (category > 0) ++out.label.counts[static_cast<std::size_t>(category) - 1];
    }

    out.series.sample_rate_hz = sample_rate_hz;
    out.series.samples.resize(n);
    std::transform(signal.begin(), signal.end(), out.series.samples.begin(), [](double v) { return static_cast<float>(v); });
    return out;
}

// ---------------------------------------------------------------------------
// Benchmark datasets

enum class Sequence { single, burst, four_one, full_burst, non_shot_only };

inline std::string to_string(Sequence s) {
    switch (s) {
        case Sequence::single: return "single";
        case Sequence::burst: return "burst";
        case Sequence::four_one: return "4-1-4-1";
        case Sequence::full_burst: return "full";
        case Sequence::non_shot_only: return "non-shot";
    }
    return "?";
}

inline Sequence sequence_from_string(const std::string& s) {
    for (auto seq : {Sequence::single, Sequence::burst, Sequence::four_one, Sequence::full_burst, Sequence::non_shot_only})
        if (to_string(seq) == s) return seq;
    throw std::invalid_argument("unknown firing sequence '" + s + "'");
}

/// One combination of external variables and how many recordings to acquire under it.
struct BinSpec {
    std::string profile;
    Sequence sequence = Sequence::burst;
    std::size_t category = 1;  // shot category fired in this bin; 0 mixes all categories
    std::size_t recordings = 10;
    int manipulations_min = 0;  // confusers added around the firing sequence
    int manipulations_max = 2;
};

struct SynthConfig {
    double sample_rate_hz = 6400.0;
    std::uint64_t seed = 1;
    std::vector<std::string> category_names{"non-shot", "shot"};
    std::vector<SynthProfile> profiles;
    std::vector<BinSpec> bins;

    [[nodiscard]] const SynthProfile& profile(const std::string& name) const {
        for (const auto& p : profiles)
            if (p.name == name) return p;
        throw std::invalid_argument("unknown synth profile '" + name + "'");
    }
};

/// Draws a firing plan for one recording of `bin`.
inline ShootingPlan random_plan(const SynthProfile& profile, const BinSpec& bin, Rng& rng) {
    ShootingPlan plan;
    plan.lead_in_ms = uniform(rng, 60.0, 200.0);
    plan.tail_ms = uniform(rng, 150.0, 300.0);
    const auto n_shot_categories = profile.shots.size();
    auto pick_category = [&]() -> std::size_t {
        if (bin.category != 0) return bin.category;
        return static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(n_shot_categories)));
    };
    auto cycle = [&] { return uniform(rng, profile.min_cycle_ms, profile.max_cycle_ms); };
    auto pause = [&] { return uniform(rng, 250.0, 600.0); };
    auto add_confusers = [&](int count) {
        for (int i = 0; i < count && !profile.confusers.empty(); ++i) {
            const auto which = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(profile.confusers.size()) - 1));
            plan.confuser(which, plan.events.empty() ? 0.0 : pause());
        }
    };
    auto manipulations = [&] {
        return static_cast<int>(uniform_int(rng, bin.manipulations_min, std::max(bin.manipulations_min, bin.manipulations_max)));
    };

    const int before = bin.sequence == Sequence::non_shot_only ? 0 : manipulations();
    add_confusers(before / 2 + before % 2);
    auto burst = [&](int rounds) {
        const auto category = pick_category();
        for (int r = 0; r < rounds; ++r) plan.shot(category, plan.events.empty() ? 0.0 : (r == 0 ? pause() : cycle()));
    };
    switch (bin.sequence) {
        case Sequence::single: {
            const auto n = uniform_int(rng, 3, 6);
            for (std::int64_t i = 0; i < n; ++i) burst(1);
            break;
        }
        case Sequence::burst: {
            const auto n = uniform_int(rng, 2, 3);
            for (std::int64_t i = 0; i < n; ++i)
                burst(static_cast<int>(uniform_int(rng, profile.burst_min_rounds, profile.burst_max_rounds)));
            break;
        }
        case Sequence::four_one:
            for (int rounds : {4, 1, 4, 1}) burst(rounds);
            break;
        case Sequence::full_burst: burst(static_cast<int>(uniform_int(rng, 10, 15))); break;
        case Sequence::non_shot_only: add_confusers(static_cast<int>(uniform_int(rng, 3, 8))); break;
    }
    add_confusers(before / 2);
    return plan;
}

/// Renders every bin of `config` into one dataset. Deterministic per config.seed.
inline Dataset synthesize_dataset(const SynthConfig& config) {
    if (config.category_names.size() < 2) throw std::invalid_argument("synth config needs at least two categories");
    Dataset dataset;
    dataset.category_names = config.category_names;
    const std::size_t n_shot_categories = config.category_names.size() - 1;
    for (std::size_t b = 0; b < config.bins.size(); ++b) {
        const auto& bin = config.bins[b];
        const auto& profile = config.profile(bin.profile);
        profile.validate();
        if (profile.shots.size() != n_shot_categories)
            throw std::invalid_argument("profile '" + profile.name + "' defines " + std::to_string(profile.shots.size()) +
                                        " shot templates, config has " + std::to_string(n_shot_categories) + " shot categories");
        if (bin.category > n_shot_categories) throw std::invalid_argument("bin category out of range");
        if (bin.sequence == Sequence::non_shot_only && profile.confusers.empty())
            throw std::invalid_argument("non-shot bin needs confuser templates in profile '" + profile.name + "'");
        BinKey key{{"profile", profile.name},
                   {"sequence", to_string(bin.sequence)},
                   {"ammo", bin.category == 0 ? std::string("mixed") : config.category_names[bin.category]}};
        for (std::size_t r = 0; r < bin.recordings; ++r) {
            Rng plan_rng(derive_seed(config.seed, (b << 32) + 2 * r));
            const auto plan = random_plan(profile, bin, plan_rng);
            auto synth = synthesize_series(profile, plan, derive_seed(config.seed, (b << 32) + 2 * r + 1), config.sample_rate_hz);
            synth.series.series_id = profile.name + "/" + to_string(bin.sequence) + "/" + key.at("ammo") + "/" + std::to_string(r);
            synth.series.bin_key = key;
            dataset.recordings.push_back({std::move(synth.series), std::move(synth.label), std::move(synth.truth)});
        }
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Reference profiles

/// Shot family: a sharp high-frequency first transient, a short-delay echo,
/// and a weaker re-strike of the same transient (bolt carrier bounce) well
/// inside the minimum cycle time. The re-strike retriggers the gate and looks
/// like a quieter shot.
inline EventTemplate reference_shot(double base_freq, double echo_delay_ms, double amp_lo, double amp_hi, std::string name = "shot") {
    return EventTemplate{std::move(name),
                         amp_lo,
                         amp_hi,
                         {{0.0, 0.0, 1.0, base_freq, 1.6},
                          {echo_delay_ms, 1.5, 0.55, base_freq * 0.8, 1.4},
                          {22.0, 6.0, 0.7, base_freq, 1.6},
                          {22.0 + echo_delay_ms, 6.0, 0.35, base_freq * 0.8, 1.4}}};
}

/// Non-shot events: a bolt manipulation (same family as the shot's bolt
/// sub-event), and a bump/fall with low-frequency ringing.
inline std::vector<EventTemplate> reference_confusers() {
    return {EventTemplate{"manipulation", 4.0, 9.0, {{0.0, 0.0, 1.0, 420.0, 3.0}, {9.0, 2.0, 0.5, 380.0, 3.0}}},
            EventTemplate{"bump", 5.0, 12.0, {{0.0, 0.0, 1.0, 650.0, 2.5}, {3.0, 1.0, 0.6, 900.0, 1.5}}}};
}

inline SynthProfile reference_profile(std::string name, std::size_t n_shot_categories, double stiffness = 1.0, std::uint64_t seed = 0) {
    SynthProfile p;
    p.name = std::move(name);
    p.seed = seed;
    p.shots.push_back(reference_shot(1300.0 * stiffness, 5.0, 6.0, 12.0, "live"));
    if (n_shot_categories >= 2) p.shots.push_back(reference_shot(1050.0 * stiffness, 9.0, 4.5, 9.0, "blank"));
    for (std::size_t extra = 2; extra < n_shot_categories; ++extra)
        p.shots.push_back(reference_shot(1600.0 * stiffness + 200.0 * static_cast<double>(extra), 7.0, 5.0, 10.0));
    p.confusers = reference_confusers();
    return p;
}

}  // namespace edgar
