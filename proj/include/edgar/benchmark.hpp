#pragma once

// Reference synthetic benchmarks and the run configurations used with them.

#include <cstdint>
#include <string>

#include "edgar/config.hpp"
#include "edgar/synth.hpp"

namespace edgar {

/// Ten bins: two weapon profiles x {single, burst, 4-1-4-1, full, non-shot}.
/// With `recordings_per_bin` = 26 this plants about 2000 shots and 500 confusers.
inline SynthConfig benchmark_synth(std::size_t n_shot_categories = 1, std::size_t recordings_per_bin = 26, std::uint64_t seed = 1,
                                   double stiffness = 1.0) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.category_names = {"non-shot"};
    if (n_shot_categories == 1) {
        cfg.category_names.push_back("shot");
    } else {
        cfg.category_names.push_back("live");
        cfg.category_names.push_back("blank");
        for (std::size_t c = 2; c < n_shot_categories; ++c) cfg.category_names.push_back("type" + std::to_string(c + 1));
    }
    cfg.profiles = {reference_profile("rifle-a", n_shot_categories, stiffness, seed * 2),
                    reference_profile("rifle-b", n_shot_categories, stiffness * 0.93, seed * 2 + 1)};
    for (const auto& p : cfg.profiles)
        for (auto seq : {Sequence::single, Sequence::burst, Sequence::four_one, Sequence::full_burst, Sequence::non_shot_only})
            cfg.bins.push_back({p.name, seq, n_shot_categories == 1 ? std::size_t{1} : std::size_t{0}, recordings_per_bin, 0, 2});
    return cfg;
}

/// Compact network and metric settings sized for desk-scale experiments.
inline RunConfig benchmark_run_config(std::size_t n_shot_categories = 1, std::size_t recordings_per_bin = 26, std::uint64_t seed = 1) {
    RunConfig rc;
    rc.synth = benchmark_synth(n_shot_categories, recordings_per_bin, seed);
    rc.pretrain_synth = benchmark_synth(n_shot_categories, recordings_per_bin / 2 + 1, seed + 1000, 0.85);
    rc.metric.window = 32;
    rc.metric.high_threshold = 2.0;
    rc.metric.low_threshold = 0.5;
    rc.metric.input_len = 96;
    rc.metric.pre_trigger = 16;
    rc.network.input_len = 96;
    rc.network.conv = {{7, 8, 2}, {5, 8, 2}};
    rc.network.hidden = 16;
    rc.network.n_categories = n_shot_categories + 1;
    rc.train.max_epochs = 120;
    rc.train.qat_max_epochs = 20;
    rc.train.group_size = 3;
    rc.train.seed = seed;
    return rc;
}

}  // namespace edgar
