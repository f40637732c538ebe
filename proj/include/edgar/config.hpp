#pragma once

// Run configuration: every tunable of a run in one JSON-serializable tree.
// Missing keys take their defaults; unknown keys are rejected.

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgar/network.hpp"
#include "edgar/preprocess.hpp"
#include "edgar/quant.hpp"
#include "edgar/synth.hpp"
#include "edgar/trainer.hpp"

namespace edgar {

struct EvalConfig {
    int weighted_random_repetitions = 100;
    std::uint64_t seed = 7;
    bool normalize_by_candidates = false;
    std::size_t ablation_seeds = 20;
    friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct RunConfig {
    SynthConfig synth;
    std::optional<SynthConfig> pretrain_synth;  // source data for the pre-training phase
    MetricConfig metric;
    NetworkConfig network;
    TrainConfig train;
    EvalConfig eval;
};

inline void to_json(nlohmann::json& j, Sequence s) { j = to_string(s); }
inline void from_json(const nlohmann::json& j, Sequence& s) { s = sequence_from_string(j.get<std::string>()); }

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Oscillation, delay_ms, delay_jitter_ms, amplitude, frequency_hz, decay_ms)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EventTemplate, name, amplitude_min, amplitude_max, components)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthProfile, name, shots, confusers, noise_sigma, min_cycle_ms, max_cycle_ms,
                                                burst_min_rounds, burst_max_rounds, amplitude_jitter, frequency_jitter, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BinSpec, profile, sequence, category, recordings, manipulations_min, manipulations_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthConfig, sample_rate_hz, seed, category_names, profiles, bins)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MetricConfig, window, offset, high_threshold, low_threshold, input_len, pre_trigger)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ConvBlock, kernel, channels, pool)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NetworkConfig, input_len, conv, hidden, n_categories, activation_clip)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VatConfig, epsilon, xi, power_iterations, alpha)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Improvements, pretrain, zero_loss, relu6, post_filter, learned_post_filter, vat)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CalibrationOptions, saturate_to_pow2)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, learning_rate, momentum, lr_patience, stop_patience, min_delta, max_epochs,
                                                qat_max_epochs, min_cycle_s, vat, vat_on_masked, improvements, quantize, calibration,
                                                calibration_candidates, group_size, seed, validation_fraction, threads)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalConfig, weighted_random_repetitions, seed, normalize_by_candidates, ablation_seeds)

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"synth", c.synth}, {"metric", c.metric}, {"network", c.network}, {"train", c.train}, {"eval", c.eval}};
    j["pretrain_synth"] = c.pretrain_synth ? nlohmann::json(*c.pretrain_synth) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    const RunConfig d;
    c.synth = j.value("synth", d.synth);
    c.metric = j.value("metric", d.metric);
    c.network = j.value("network", d.network);
    c.train = j.value("train", d.train);
    c.eval = j.value("eval", d.eval);
    if (j.contains("pretrain_synth") && !j.at("pretrain_synth").is_null())
        c.pretrain_synth = j.at("pretrain_synth").get<SynthConfig>();
    else
        c.pretrain_synth.reset();
}

namespace detail {

/// Throws on keys of `given` that the round-tripped `known` tree does not contain.
inline void reject_unknown_keys(const nlohmann::json& given, const nlohmann::json& known, const std::string& path) {
    if (given.is_object() && known.is_object()) {
        for (const auto& [key, value] : given.items()) {
            const std::string here = path.empty() ? key : path + "." + key;
            if (!known.contains(key)) throw std::invalid_argument("unknown configuration key '" + here + "'");
            reject_unknown_keys(value, known.at(key), here);
        }
    } else if (given.is_array() && known.is_array() && given.size() == known.size()) {
        for (std::size_t i = 0; i < given.size(); ++i) reject_unknown_keys(given[i], known[i], path + "[" + std::to_string(i) + "]");
    }
}

}  // namespace detail

/// Consistency between sections that must agree.
inline void validate(const RunConfig& c) {
    c.metric.validate();
    c.train.validate();
    make_layout(c.network);
    if (c.network.input_len != c.metric.input_len)
        throw std::invalid_argument("network.input_len (" + std::to_string(c.network.input_len) + ") differs from metric.input_len (" +
                                    std::to_string(c.metric.input_len) + ")");
    if (c.network.n_categories != c.synth.category_names.size())
        throw std::invalid_argument("network.n_categories does not match the number of synth category names");
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig c;
    try {
        c = j.get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad configuration: ") + e.what());
    }
    detail::reject_unknown_keys(j, nlohmann::json(c), "");
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open configuration '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("configuration '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

inline void save_run_config(const std::filesystem::path& path, const RunConfig& c) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << nlohmann::json(c).dump(2) << '\n';
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace edgar
