// edgar: synthesize datasets, train, quantize, evaluate, run ablations and
// replay sensor streams through the real-time detector.
//
// Exit codes: 0 success, 1 bad input (arguments, configs, files), 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgar/benchmark.hpp"
#include "edgar/config.hpp"
#include "edgar/edgar.hpp"
#include "edgar/model_io.hpp"

namespace fs = std::filesystem;
using namespace edgar;

namespace {

struct bad_input : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tiny preset: a few recordings per bin and short schedules, for smoke runs.
RunConfig tiny_preset(std::uint64_t seed) {
    auto rc = benchmark_run_config(1, 4, seed);
    rc.pretrain_synth = benchmark_synth(1, 3, seed + 1000, 0.85);
    rc.train.max_epochs = 40;
    rc.train.qat_max_epochs = 5;
    rc.train.group_size = 1;
    rc.eval.ablation_seeds = 2;
    rc.eval.weighted_random_repetitions = 20;
    return rc;
}

struct ConfigArgs {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App* app, const std::string& default_preset) {
        preset = default_preset;
        app->add_option("--config", config, "run configuration (JSON)")->check(CLI::ExistingFile);
        app->add_option("--preset", preset, "built-in configuration when --config is absent")
            ->check(CLI::IsMember({"tiny", "benchmark", "benchmark3"}))
            ->capture_default_str();
        app->add_option("--seed", seed, "override the seed of the run");
    }

    [[nodiscard]] RunConfig resolve(bool seed_is_synth) const {
        RunConfig rc;
        if (!config.empty()) {
            rc = load_run_config(config);
        } else if (preset == "tiny") {
            rc = tiny_preset(1);
        } else if (preset == "benchmark3") {
            rc = benchmark_run_config(2);
        } else {
            rc = benchmark_run_config(1);
        }
        if (seed) {
            if (seed_is_synth) {
                rc.synth.seed = *seed;
                if (rc.pretrain_synth) rc.pretrain_synth->seed = *seed + 1000;
            } else {
                rc.train.seed = *seed;
            }
        }
        validate(rc);
        return rc;
    }
};

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw bad_input(std::string(what) + " '" + path + "' does not exist");
}

fs::path sibling(const fs::path& out, const std::string& suffix) { return fs::path(out.string() + suffix); }

void ensure_parent(const fs::path& out) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
}

Dataset load_checked(const std::string& path, const RunConfig& rc) {
    require_file(path, "dataset");
    auto ds = load_dataset(path);
    if (ds.n_categories() != rc.network.n_categories)
        throw bad_input("dataset '" + path + "' has " + std::to_string(ds.n_categories()) + " categories, the network expects " +
                        std::to_string(rc.network.n_categories));
    return ds;
}

void print_rate(const char* label, const CountReport& report) {
    if (report.true_total() > 0)
        std::printf("%s %.9g\n", label, error_rate(report));
    else
        std::printf("%s n/a\n", label);
}

void write_history(const fs::path& path, const PipelineResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "seed,phase,epoch,train_loss,val_loss,val_errors,lr\n";
    auto rows = [&](std::uint64_t seed, const char* phase, const PhaseResult& p) {
        for (const auto& h : p.history)
            out << seed << ',' << phase << ',' << h.epoch << ',' << h.train_loss << ',' << h.val_loss << ',' << h.val_errors << ',' << h.lr
                << '\n';
    };
    for (const auto& s : result.seeds) {
        if (s.pretrain) rows(s.seed, "pretrain", *s.pretrain);
        rows(s.seed, "train", s.train);
        if (s.qat) rows(s.seed, "qat", *s.qat);
    }
}

std::optional<SplitData> pretrain_data(const std::string& path, const RunConfig& rc) {
    if (!rc.train.improvements.pretrain) return std::nullopt;
    if (!path.empty()) return prepare_split(load_checked(path, rc), rc.metric, rc.train.validation_fraction, rc.train.seed);
    if (rc.pretrain_synth) {
        std::printf("pretraining on data synthesized from the pretrain_synth section\n");
        return prepare_split(synthesize_dataset(*rc.pretrain_synth), rc.metric, rc.train.validation_fraction, rc.train.seed);
    }
    std::printf("no pretraining data given; skipping the pretraining phase\n");
    return std::nullopt;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    ConfigArgs cfg;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    const auto rc = a.cfg.resolve(true);
    const auto ds = synthesize_dataset(rc.synth);
    ensure_parent(a.out);
    save_dataset(a.out, ds);
    save_run_config(sibling(a.out, ".config.json"), rc);
    long shots = 0;
    for (const auto& r : ds.recordings) shots += r.label.total();
    std::printf("wrote %zu recordings, %ld shots to %s\n", ds.recordings.size(), shots, a.out.c_str());
    return 0;
}

struct TrainArgs {
    ConfigArgs cfg;
    std::string data, pretrain, out;
    std::optional<unsigned> threads;
    std::optional<std::size_t> group;
};

int cmd_train(const TrainArgs& a) {
    auto rc = a.cfg.resolve(false);
    if (a.threads) rc.train.threads = *a.threads;
    if (a.group) rc.train.group_size = *a.group;
    validate(rc);
    const auto target = prepare_split(load_checked(a.data, rc), rc.metric, rc.train.validation_fraction, rc.train.seed);
    const auto pre = pretrain_data(a.pretrain, rc);
    print_warnings(target.learning.warnings);
    print_warnings(target.validation.warnings);
    const auto result = train_pipeline(rc.network, target, pre ? &*pre : nullptr, rc.train);
    const auto& best = result.best();

    ModelBundle bundle;
    bundle.model = best.qat ? best.qat->best : best.train.best;
    bundle.metric = rc.metric;
    bundle.min_cycle_s = rc.train.min_cycle_s;
    bundle.category_names = rc.synth.category_names;
    bundle.quantized = best.quantized;
    const fs::path out = a.out;
    ensure_parent(out);
    save_model(out, bundle);
    save_run_config(sibling(out, ".config.json"), rc);
    write_history(sibling(out, ".history.csv"), result);

    std::printf("seeds %zu, best seed %llu (%s model)\n", result.seeds.size(), static_cast<unsigned long long>(best.seed),
                best.quantized ? "quantized" : "float");
    std::printf("validation errors %ld, false positives %ld, loss %.6f\n", best.validation.shot_errors, best.validation.false_positives,
                best.validation.loss);
    if (best.validation.true_total > 0)
        std::printf("error_rate %.9g\n", best.validation.error_rate());
    else
        std::printf("error_rate n/a\n");
    return 0;
}

struct QuantizeArgs {
    ConfigArgs cfg;
    std::string model, data, out;
    std::optional<int> qat_epochs;
};

int cmd_quantize(const QuantizeArgs& a) {
    auto rc = a.cfg.resolve(false);
    require_file(a.model, "model");
    auto bundle = load_model(a.model);
    if (bundle.model.config.input_len != rc.metric.input_len) throw bad_input("model input length does not match the configuration");
    const auto split = prepare_split(load_checked(a.data, rc), rc.metric, rc.train.validation_fraction, rc.train.seed);
    const int epochs = a.qat_epochs.value_or(rc.train.qat_max_epochs);
    const auto& imp = rc.train.improvements;
    const auto float_eval =
        evaluate_set(split.validation, float_predictor(bundle.model), imp.zero_loss, imp.learned_post_filter, imp.post_filter, bundle.min_cycle_s);
    if (epochs > 0) {
        rc.train.qat_max_epochs = epochs;
        const auto qat = train_phase(bundle.model, split.learning, split.validation, rc.train, derive_seed(rc.train.seed, 3), true);
        bundle.model = qat.best;
        bundle.quantized = quantize_model(qat.best, *qat.quant_state);
    } else {
        const auto calib = detail::calibration_slices(split.learning, rc.train.calibration_candidates);
        bundle.quantized = calibrate_and_quantize(bundle.model, calib, rc.train.calibration);
    }
    const auto q_eval = evaluate_set(split.validation, quantized_predictor(*bundle.quantized), imp.zero_loss, imp.learned_post_filter,
                                     imp.post_filter, bundle.min_cycle_s);
    ensure_parent(a.out);
    save_model(a.out, bundle);
    save_run_config(sibling(a.out, ".config.json"), rc);
    std::printf("float validation E %.4f%%, quantized validation E %.4f%%, scratch %zu bytes\n", 100.0 * float_eval.error_rate(),
                100.0 * q_eval.error_rate(), bundle.quantized->scratch_bytes());
    return 0;
}

struct EvalArgs {
    ConfigArgs cfg;
    std::string model, data, split = "validation", csv;
    bool use_float = false;
    bool baselines = false;
    bool by_candidates = false;
};

int cmd_eval(EvalArgs a) {
    require_file(a.model, "model");
    if (a.cfg.config.empty() && fs::is_regular_file(sibling(a.model, ".config.json"))) {
        a.cfg.config = sibling(a.model, ".config.json").string();
        std::printf("using configuration %s\n", a.cfg.config.c_str());
    }
    const auto rc = a.cfg.resolve(false);
    const auto bundle = load_model(a.model);
    const auto ds = load_checked(a.data, rc);
    const auto metric = bundle.metric;
    SplitData split;
    if (a.split == "all") {
        split.validation = prepare(ds, metric);
        split.learning = split.validation;
    } else {
        split = prepare_split(ds, metric, rc.train.validation_fraction, rc.train.seed);
    }
    const auto& set = split.validation;
    print_warnings(set.warnings);
    const bool post_filter = rc.train.improvements.post_filter;
    const Predictor pred = (a.use_float || !bundle.quantized) ? float_predictor(bundle.model) : quantized_predictor(*bundle.quantized);
    const auto report = count_report(set, pred, post_filter, bundle.min_cycle_s);

    std::printf("%s model on %s split: %zu recordings, %zu candidates\n", (a.use_float || !bundle.quantized) ? "float" : "quantized",
                a.split.c_str(), set.recordings.size(), set.n_candidates());
    std::ostringstream summary;
    write_count_summary(summary, report, bundle.category_names);
    std::fputs(summary.str().c_str(), stdout);
    const auto norm = (a.by_candidates || rc.eval.normalize_by_candidates) ? Normalization::candidates : Normalization::shots;
    if (report.true_total() > 0)
        std::printf("error_rate %.9g%s\n", error_rate(report, norm), norm == Normalization::candidates ? " (per candidate)" : "");
    else
        std::printf("error_rate n/a\n");

    if (a.baselines) {
        print_rate("baseline always-non-shot", baseline_always_non_shot(set));
        print_rate("baseline always-shot", baseline_always_shot(set));
        const auto wr = baseline_weighted_random(split.learning, set, rc.eval.seed, rc.eval.weighted_random_repetitions);
        std::printf("baseline weighted-random mean %.9g sd %.9g (%zu repetitions)\n", wr.mean(), wr.sd(), wr.rates.size());
    }
    if (!a.csv.empty()) {
        ensure_parent(a.csv);
        std::ofstream out(a.csv);
        if (!out) throw std::runtime_error("cannot write '" + a.csv + "'");
        write_count_csv(out, report, bundle.category_names);
    }
    return 0;
}

struct AblateArgs {
    ConfigArgs cfg;
    std::string data, pretrain, out_dir;
    std::optional<std::size_t> seeds;
    std::optional<unsigned> threads;
};

int cmd_ablate(const AblateArgs& a) {
    auto rc = a.cfg.resolve(false);
    if (a.threads) rc.train.threads = *a.threads;
    if (a.seeds) rc.eval.ablation_seeds = *a.seeds;
    if (rc.eval.ablation_seeds < 1) throw bad_input("need at least one seed per rung");
    const auto target = prepare_split(load_checked(a.data, rc), rc.metric, rc.train.validation_fraction, rc.train.seed);
    auto with_pretrain = rc;
    with_pretrain.train.improvements.pretrain = true;
    const auto pre = pretrain_data(a.pretrain, with_pretrain);
    const auto report = ablation_report(rc.network, target, pre ? &*pre : nullptr, rc.train, rc.eval.ablation_seeds);

    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "ablation.csv");
        write_ablation_csv(out, report);
        std::ofstream q(dir / "ablation_quantiles.csv");
        write_ablation_quantiles(q, report);
        if (!out || !q) throw std::runtime_error("cannot write ablation tables to '" + dir.string() + "'");
    }
    save_run_config(dir / "config.json", rc);
    for (const auto& r : report.rungs) std::printf("%-22s seeds %2zu  median E %7.3f%%\n", r.name.c_str(), r.error_rates.size(), 100.0 * r.median());
    std::printf("non-increasing steps %d of %zu\n", report.non_increasing_steps(), report.rungs.size() - 1);
    return 0;
}

struct ReplayArgs {
    std::string model, stream, events;
};

int cmd_replay(const ReplayArgs& a) {
    require_file(a.model, "model");
    require_file(a.stream, "stream");
    const auto bundle = load_model(a.model);
    const auto stream = load_stream(a.stream);
    StreamingDetector det(bundle.metric, bundle.require_quantized(), bundle.min_cycle_s, stream.sample_rate_hz);
    const auto events = replay(det, stream.samples);
    if (a.events.empty()) {
        write_event_log(std::cout, events, bundle.category_names);
    } else {
        ensure_parent(a.events);
        std::ofstream out(a.events);
        write_event_log(out, events, bundle.category_names);
        if (!out) throw std::runtime_error("cannot write '" + a.events + "'");
    }
    std::cout.flush();
    const auto r = det.report();
    for (std::size_t c = 0; c < r.counts.size(); ++c) std::printf("count %s %ld\n", bundle.category_names[c + 1].c_str(), r.counts[c]);
    std::printf("samples %llu, candidates %ld, inferences %ld, suppressed %ld, scratch %zu bytes\n",
                static_cast<unsigned long long>(r.samples), r.candidates, r.inferences, r.suppressed, det.scratch_bytes());
    return 0;
}

struct StreamArgs {
    ConfigArgs cfg;
    std::string data, series, out;
    int shots = 0;
    double gap_ms = 300.0;
};

/// A stream file from a dataset recording, or a fresh recording of `shots`
/// single shots of category 1 from the first profile of the configuration.
int cmd_stream(const StreamArgs& a) {
    StreamFile s;
    std::string what;
    if (!a.data.empty()) {
        require_file(a.data, "dataset");
        const auto ds = load_dataset(a.data);
        const Recording* found = nullptr;
        for (const auto& r : ds.recordings)
            if (r.series.series_id == a.series) found = &r;
        if (!found) throw bad_input("no recording '" + a.series + "' in '" + a.data + "'");
        s.sample_rate_hz = found->series.sample_rate_hz;
        s.samples = found->series.samples;
        what = "recording " + a.series + " (" + std::to_string(found->label.total()) + " shots)";
    } else {
        if (a.shots < 0) throw bad_input("--shots must be >= 0");
        const auto rc = a.cfg.resolve(true);
        if (rc.synth.profiles.empty()) throw bad_input("configuration has no synth profiles");
        ShootingPlan plan;
        for (int k = 0; k < a.shots; ++k) plan.shot(1, k == 0 ? 0.0 : a.gap_ms);
        const auto series = synthesize_series(rc.synth.profiles.front(), plan, rc.synth.seed, rc.synth.sample_rate_hz);
        s.sample_rate_hz = series.series.sample_rate_hz;
        s.samples = series.series.samples;
        what = std::to_string(a.shots) + " planted shots";
    }
    ensure_parent(a.out);
    save_stream(a.out, s);
    std::printf("wrote %zu samples (%s) to %s\n", s.samples.size(), what.c_str(), a.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgar: shot counting from weakly labelled accelerometer recordings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "edgar 1.0");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "synthesize a labelled dataset");
    synth.cfg.add_to(s, "benchmark");
    s->add_option("--out", synth.out, "dataset file to write")->required();

    TrainArgs train;
    auto* t = app.add_subcommand("train", "train a group of seeds and keep the best model");
    train.cfg.add_to(t, "benchmark");
    t->add_option("--data", train.data, "target dataset")->required();
    t->add_option("--pretrain-data", train.pretrain, "wider dataset for the pretraining phase");
    t->add_option("--out", train.out, "model file to write")->required();
    t->add_option("--threads", train.threads, "seeds trained concurrently (0 = all cores)");
    t->add_option("--group", train.group, "number of seeds");

    QuantizeArgs quant;
    auto* q = app.add_subcommand("quantize", "quantization-aware fine tuning and 8-bit export of a float model");
    quant.cfg.add_to(q, "benchmark");
    q->add_option("--model", quant.model, "input model")->required();
    q->add_option("--data", quant.data, "dataset the model was trained on")->required();
    q->add_option("--out", quant.out, "model file to write")->required();
    q->add_option("--qat-epochs", quant.qat_epochs, "quantization-aware epochs (0 = calibrate only)");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "count shots and report error rates");
    ev.cfg.add_to(e, "benchmark");
    e->add_option("--model", ev.model, "model file")->required();
    e->add_option("--data", ev.data, "dataset")->required();
    e->add_option("--split", ev.split, "recordings to score")->check(CLI::IsMember({"validation", "all"}))->capture_default_str();
    e->add_option("--csv", ev.csv, "per-series counts table");
    e->add_flag("--float", ev.use_float, "score the float model even when a quantized one is present");
    e->add_flag("--baselines", ev.baselines, "also score the trivial and weighted-random baselines");
    e->add_flag("--normalize-by-candidates", ev.by_candidates, "divide errors by candidates instead of true shots");

    AblateArgs abl;
    auto* ab = app.add_subcommand("ablate", "train every rung of the improvement ladder over several seeds");
    abl.cfg.add_to(ab, "benchmark");
    ab->add_option("--data", abl.data, "target dataset")->required();
    ab->add_option("--pretrain-data", abl.pretrain, "wider dataset for the pretraining rungs");
    ab->add_option("--out-dir", abl.out_dir, "directory for the result tables")->required();
    ab->add_option("--seeds", abl.seeds, "seeds per rung");
    ab->add_option("--threads", abl.threads, "seeds trained concurrently (0 = all cores)");

    ReplayArgs rep;
    auto* r = app.add_subcommand("replay", "run a stream file through the real-time detector");
    r->add_option("--model", rep.model, "quantized model")->required();
    r->add_option("--stream", rep.stream, "stream file")->required();
    r->add_option("--events", rep.events, "write the event log here instead of stdout");

    StreamArgs st;
    auto* sm = app.add_subcommand("stream", "write a stream file from a recording or from planted shots");
    st.cfg.add_to(sm, "benchmark");
    sm->add_option("--data", st.data, "dataset holding the recording");
    sm->add_option("--series", st.series, "series id of the recording");
    sm->add_option("--shots", st.shots, "number of single shots to plant");
    sm->add_option("--gap-ms", st.gap_ms, "time between planted shots")->capture_default_str();
    sm->add_option("--out", st.out, "stream file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (s->parsed()) return cmd_synth(synth);
        if (t->parsed()) return cmd_train(train);
        if (q->parsed()) return cmd_quantize(quant);
        if (e->parsed()) return cmd_eval(ev);
        if (ab->parsed()) return cmd_ablate(abl);
        if (r->parsed()) return cmd_replay(rep);
        if (sm->parsed()) {
            if (!st.data.empty() && st.series.empty()) throw bad_input("--data needs --series");
            return cmd_stream(st);
        }
    } catch (const bad_input& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    } catch (const std::invalid_argument& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    } catch (const format_error& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "failed: %s\n", err.what());
        return 2;
    }
    return 2;
}
