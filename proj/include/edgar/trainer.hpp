#pragma once

// Learning from count labels: per-recording objective, one training phase
// (float or quantization-aware), and the multi-seed pipeline
// pre-training -> training -> quantization-aware training.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "edgar/network.hpp"
#include "edgar/optimizer.hpp"
#include "edgar/post_filter.hpp"
#include "edgar/preprocess.hpp"
#include "edgar/proportion.hpp"
#include "edgar/quant.hpp"
#include "edgar/random.hpp"
#include "edgar/signal.hpp"
#include "edgar/vat.hpp"

namespace edgar {

/// The incremental improvements, in the order they are stacked by the ablation ladder.
struct Improvements {
    bool pretrain = true;
    bool zero_loss = true;
    bool relu6 = true;
    bool post_filter = true;
    bool learned_post_filter = true;
    bool vat = true;
    friend bool operator==(const Improvements&, const Improvements&) = default;
};

struct TrainConfig {
    double learning_rate = 0.002;
    double momentum = 0.9;
    int lr_patience = 20;
    int stop_patience = 40;
    double min_delta = 1e-5;
    int max_epochs = 300;
    int qat_max_epochs = 60;
    double min_cycle_s = 0.040;  // T_M
    VatConfig vat;
    bool vat_on_masked = true;  // VAT term over all candidates, not only unmasked ones
    Improvements improvements;
    bool quantize = true;  // run the quantization-aware phase
    CalibrationOptions calibration;
    std::size_t calibration_candidates = 512;
    std::size_t group_size = 20;
    std::uint64_t seed = 0;
    double validation_fraction = 0.10;
    unsigned threads = 1;  // seeds trained concurrently; 0 = hardware concurrency

    void validate() const {
        if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
        if (lr_patience < 1 || stop_patience < 1) throw std::invalid_argument("patience values must be positive");
        if (!(min_cycle_s > 0.0)) throw std::invalid_argument("minimum cycle time must be positive");
        if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
        if (group_size < 1) throw std::invalid_argument("group size must be >= 1");
        vat.validate();
    }
};

// ---------------------------------------------------------------------------
// Prepared data

struct PreparedRecording {
    std::string series_id;
    std::vector<std::vector<double>> xs;  // candidate slices
    std::vector<double> times;            // trigger timestamps, seconds
    WeakLabel label;
    ProportionTarget target;
    bool usable = true;  // false: more counted events than candidates
};

struct PreparedSet {
    std::size_t n_categories = 2;
    std::vector<PreparedRecording> recordings;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t n_candidates() const {
        std::size_t n = 0;
        for (const auto& r : recordings) n += r.xs.size();
        return n;
    }
};

/// Extracts candidates and proportion targets. Recordings with more counted
/// events than candidates stay in the set (for counting) but are flagged and
/// excluded from the loss, with a warning.
inline PreparedSet prepare(const Dataset& dataset, const MetricConfig& metric) {
    dataset.validate();
    metric.validate();
    PreparedSet set;
    set.n_categories = dataset.n_categories();
    for (const auto& rec : dataset.recordings) {
        PreparedRecording p;
        p.series_id = rec.series.series_id;
        p.label = rec.label;
        if (!rec.series.samples.empty()) {
            for (auto& c : extract_candidates(rec.series, metric)) {
                p.xs.emplace_back(c.x.begin(), c.x.end());
                p.times.push_back(c.t);
            }
        }
        if (p.xs.empty()) {
            p.target.p.assign(set.n_categories, 0.0);
            p.target.p[0] = 1.0;
            if (rec.label.total() > 0) {
                p.usable = false;
                set.warnings.push_back("recording '" + p.series_id + "' excluded: no candidates but " +
                                       std::to_string(rec.label.total()) + " counted events");
            }
        } else {
            try {
                p.target = build_target(rec.label, p.xs.size());
            } catch (const unusable_recording& e) {
                p.usable = false;
                p.target.p.assign(set.n_categories, 0.0);
                p.target.p[0] = 1.0;
                set.warnings.push_back("recording '" + p.series_id + "' excluded: " + e.what());
            }
        }
        set.recordings.push_back(std::move(p));
    }
    return set;
}

// ---------------------------------------------------------------------------
// Per-recording objective

struct ObjectiveOptions {
    bool zero_loss = true;
    bool learned_post_filter = true;
    double min_cycle_s = 0.040;
    bool vat = false;
    bool vat_on_masked = true;
    VatConfig vat_config;
    const ActivationQuant* quant = nullptr;
};

/// Loss of one recording: proportion loss of the (masked) mean prediction plus
/// the mean VAT term. The forward state, mask and VAT perturbations are kept so
/// the same objective can be re-evaluated at other parameters with everything
/// non-differentiable frozen (gradient checks).
class RecordingObjective {
public:
    void forward_all(const NetworkLayout& layout, std::span<const double> params, const PreparedRecording& rec,
                     const ObjectiveOptions& opts) {
        const std::size_t n = rec.xs.size();
        if (records_.size() < n) records_.resize(n);
        preds_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            forward<double>(layout, params, rec.xs[j], records_[j], opts.quant);
            preds_[j] = records_[j].probs;
        }
        mask_ = opts.learned_post_filter ? duplicate_mask(preds_, rec.times, opts.min_cycle_s) : std::vector<bool>(n, true);
    }

    /// Draws the adversarial perturbations at the parameters of the last forward_all.
    void draw_vat(const NetworkLayout& layout, std::span<const double> params, const PreparedRecording& rec, const ObjectiveOptions& opts,
                  Rng& rng) {
        const std::size_t n = rec.xs.size();
        r_adv_.resize(n);
        p_clean_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            p_clean_[j] = preds_[j];
            if (!vat_applies(j, opts)) {
                r_adv_[j].clear();
                continue;
            }
            r_adv_[j] = vat_perturbation(layout, params, rec.xs[j], p_clean_[j], opts.vat_config, rng, vat_ws_, opts.quant);
        }
    }

    /// Loss at the state of the last forward_all; accumulates its gradient into `grad` when non-empty.
    double loss_and_grad(const NetworkLayout& layout, std::span<const double> params, const PreparedRecording& rec,
                         const ObjectiveOptions& opts, std::span<double> grad) {
        const std::size_t n = rec.xs.size();
        const auto p_hat = masked_mean(n, layout.n_outputs);
        double loss = proportion_loss(rec.target.p, p_hat, opts.zero_loss);
        if (!grad.empty()) {
            auto g = proportion_loss_grad(rec.target.p, p_hat);
            for (auto& v : g) v /= static_cast<double>(n);
            std::vector<double> dlogits(layout.n_outputs);
            for (std::size_t j = 0; j < n; ++j) {
                if (!mask_[j]) continue;
                softmax_backward<double>(preds_[j], g, dlogits);
                backward<double>(layout, params, records_[j], dlogits, grad);
            }
        }
        if (opts.vat) loss += vat_term(layout, params, rec, opts, grad);
        return loss;
    }

    /// Same objective at `params` with the mask, VAT perturbations and clean VAT
    /// targets frozen from the last forward_all/draw_vat.
    double frozen_loss(const NetworkLayout& layout, std::span<const double> params, const PreparedRecording& rec,
                       const ObjectiveOptions& opts) {
        const std::size_t n = rec.xs.size();
        ForwardRecord<double> r;
        std::vector<std::vector<double>> preds(n);
        for (std::size_t j = 0; j < n; ++j) {
            forward<double>(layout, params, rec.xs[j], r, opts.quant);
            preds[j] = r.probs;
        }
        std::vector<double> p_hat(layout.n_outputs, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t c = 0; c < layout.n_outputs; ++c) p_hat[c] += mask_[j] ? preds[j][c] : (c == 0 ? 1.0 : 0.0);
        for (auto& v : p_hat) v /= static_cast<double>(n);
        double loss = proportion_loss(rec.target.p, p_hat, opts.zero_loss);
        if (opts.vat) loss += vat_term(layout, params, rec, opts, {});
        return loss;
    }

    [[nodiscard]] const std::vector<std::vector<double>>& predictions() const noexcept { return preds_; }
    [[nodiscard]] const std::vector<bool>& mask() const noexcept { return mask_; }
    [[nodiscard]] const std::vector<std::vector<double>>& perturbations() const noexcept { return r_adv_; }

private:
    [[nodiscard]] bool vat_applies(std::size_t j, const ObjectiveOptions& opts) const { return opts.vat_on_masked || mask_[j]; }

    std::vector<double> masked_mean(std::size_t n, std::size_t n_out) const {
        std::vector<double> p_hat(n_out, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (mask_[j])
                for (std::size_t c = 0; c < n_out; ++c) p_hat[c] += preds_[j][c];
            else
                p_hat[0] += 1.0;
        }
        for (auto& v : p_hat) v /= static_cast<double>(n);
        return p_hat;
    }

    double vat_term(const NetworkLayout& layout, std::span<const double> params, const PreparedRecording& rec, const ObjectiveOptions& opts,
                    std::span<double> grad) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < rec.xs.size(); ++j) count += vat_applies(j, opts) && !r_adv_[j].empty();
        if (count == 0) return 0.0;
        const double scale = 1.0 / static_cast<double>(count);
        double total = 0.0;
        for (std::size_t j = 0; j < rec.xs.size(); ++j) {
            if (!vat_applies(j, opts) || r_adv_[j].empty()) continue;
            total += vat_loss_fixed(layout, params, rec.xs[j], r_adv_[j], p_clean_[j], opts.vat_config.alpha, vat_ws_, grad, scale, opts.quant);
        }
        return total * scale;
    }

    std::vector<ForwardRecord<double>> records_;
    std::vector<std::vector<double>> preds_;
    std::vector<bool> mask_;
    std::vector<std::vector<double>> r_adv_;
    std::vector<std::vector<double>> p_clean_;
    VatWorkspace vat_ws_;
};

// ---------------------------------------------------------------------------
// Evaluation of a prepared set

struct SetEvaluation {
    double loss = 0.0;       // mean proportion loss over usable recordings with candidates
    long errors = 0;         // sum |c_hat - c| over all recordings and categories (model selection)
    long shot_errors = 0;    // the same, restricted to recordings with shots
    long false_positives = 0;  // shots counted on recordings without shots
    long true_total = 0;
    std::vector<std::vector<int>> estimated;

    [[nodiscard]] double error_rate() const {
        return true_total > 0 ? static_cast<double>(shot_errors) / static_cast<double>(true_total)
                              : std::numeric_limits<double>::quiet_NaN();
    }
};

using Predictor = std::function<void(std::span<const double>, std::vector<double>&)>;

inline SetEvaluation evaluate_set(const PreparedSet& set, const Predictor& predict_fn, bool zero_loss, bool learned_post_filter,
                                  bool post_filter, double min_cycle_s) {
    SetEvaluation ev;
    std::size_t loss_terms = 0;
    std::vector<std::vector<double>> preds;
    for (const auto& rec : set.recordings) {
        preds.resize(rec.xs.size());
        for (std::size_t j = 0; j < rec.xs.size(); ++j) predict_fn(rec.xs[j], preds[j]);
        const auto counts = count_shots(preds, rec.times, set.n_categories, post_filter, min_cycle_s);
        long diff = 0;
        for (std::size_t c = 0; c < counts.size(); ++c) diff += std::abs(counts[c] - rec.label.counts[c]);
        ev.errors += diff;
        if (rec.label.total() > 0) {
            ev.shot_errors += diff;
            ev.true_total += rec.label.total();
        } else {
            ev.false_positives += diff;
        }
        ev.estimated.push_back(counts);
        if (!rec.usable || rec.xs.empty()) continue;
        std::vector<double> p_hat;
        if (learned_post_filter) {
            const auto masked = mask_duplicates(preds, rec.times, min_cycle_s);
            p_hat = aggregate(masked.preds);
        } else {
            p_hat = aggregate(preds);
        }
        ev.loss += proportion_loss(rec.target.p, p_hat, zero_loss);
        ++loss_terms;
    }
    if (loss_terms > 0) ev.loss /= static_cast<double>(loss_terms);
    return ev;
}

inline Predictor float_predictor(const Model& model) {
    auto layout = std::make_shared<NetworkLayout>(model.layout());
    auto rec = std::make_shared<ForwardRecord<double>>();
    auto params = std::make_shared<std::vector<double>>(model.params);
    return [layout, rec, params](std::span<const double> x, std::vector<double>& out) {
        forward<double>(*layout, *params, x, *rec);
        out = rec->probs;
    };
}

inline Predictor fake_quant_predictor(const Model& model, const QuantState& state) {
    auto layout = std::make_shared<NetworkLayout>(model.layout());
    auto fq = std::make_shared<FakeQuantParams>(fake_quant_params(*layout, model.params, state));
    auto act = std::make_shared<ActivationQuant>(state.activation_quant());
    auto rec = std::make_shared<ForwardRecord<double>>();
    return [layout, fq, act, rec](std::span<const double> x, std::vector<double>& out) {
        forward<double>(*layout, fq->values, x, *rec, act.get());
        out = rec->probs;
    };
}

inline Predictor quantized_predictor(const QuantizedModel& model) {
    auto qm = std::make_shared<QuantizedModel>(model);
    auto scratch = std::make_shared<QuantScratch>(*qm);
    auto xf = std::make_shared<std::vector<float>>();
    return [qm, scratch, xf](std::span<const double> x, std::vector<double>& out) {
        xf->assign(x.begin(), x.end());
        const auto probs = qforward(*qm, *xf, *scratch);
        out.assign(probs.begin(), probs.end());
    };
}

// ---------------------------------------------------------------------------
// One training phase

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    long val_errors = 0;
    double lr = 0.0;
};

struct PhaseResult {
    Model best;
    std::optional<QuantState> quant_state;  // set by quantization-aware phases
    long best_errors = 0;
    double best_loss = 0.0;
    int best_epoch = 0;
    bool diverged = false;
    std::vector<EpochStats> history;
    std::vector<std::string> warnings;
};

inline bool better(long errors_a, double loss_a, long errors_b, double loss_b) {
    return std::tie(errors_a, loss_a) < std::tie(errors_b, loss_b);
}

namespace detail {

inline std::vector<std::vector<float>> calibration_slices(const PreparedSet& set, std::size_t max_count) {
    std::vector<std::vector<float>> out;
    const std::size_t total = set.n_candidates();
    if (total == 0) return out;
    const std::size_t stride = std::max<std::size_t>(1, total / std::max<std::size_t>(1, max_count));
    std::size_t k = 0;
    for (const auto& rec : set.recordings)
        for (const auto& x : rec.xs)
            if (k++ % stride == 0 && out.size() < max_count) out.emplace_back(x.begin(), x.end());
    return out;
}

}  // namespace detail

/// Trains `initial` on `learning`, monitoring `validation`. Returns the epoch
/// checkpoint with the fewest validation counting errors (ties: lowest
/// validation loss). With `quantization_aware`, weights and activations are
/// fake-quantized in every forward pass and ranges are recalibrated per epoch.
inline PhaseResult train_phase(const Model& initial, const PreparedSet& learning, const PreparedSet& validation, const TrainConfig& cfg,
                               std::uint64_t seed, bool quantization_aware = false) {
    cfg.validate();
    const auto& imp = cfg.improvements;
    const auto layout = initial.layout();
    Model model = initial;
    PhaseResult result;
    result.warnings = learning.warnings;
    result.warnings.insert(result.warnings.end(), validation.warnings.begin(), validation.warnings.end());

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < learning.recordings.size(); ++i)
        if (learning.recordings[i].usable && !learning.recordings[i].xs.empty()) order.push_back(i);
    if (order.empty()) throw std::invalid_argument("train_phase: no usable learning recordings");

    const auto calib = quantization_aware ? detail::calibration_slices(learning, cfg.calibration_candidates) : std::vector<std::vector<float>>{};
    QuantState qstate;
    ActivationQuant act_quant;

    ObjectiveOptions opts;
    opts.zero_loss = imp.zero_loss;
    opts.learned_post_filter = imp.learned_post_filter;
    opts.min_cycle_s = cfg.min_cycle_s;
    // Fake-quantized inputs swallow the xi-sized probe, so VAT is off while training through quantization.
    opts.vat = imp.vat && !quantization_aware && cfg.vat.epsilon > 0.0;
    opts.vat_on_masked = cfg.vat_on_masked;
    opts.vat_config = cfg.vat;

    auto evaluate = [&](const Model& m) {
        const Predictor pred = quantization_aware ? fake_quant_predictor(m, qstate) : float_predictor(m);
        return evaluate_set(validation, pred, imp.zero_loss, imp.learned_post_filter, imp.post_filter, cfg.min_cycle_s);
    };

    if (quantization_aware) {
        qstate = calibrate(model, calib, cfg.calibration);
        act_quant = qstate.activation_quant();
    }
    {
        const auto ev = evaluate(model);
        result.best = model;
        result.best_errors = ev.errors;
        result.best_loss = ev.loss;
        result.quant_state = quantization_aware ? std::optional<QuantState>(qstate) : std::nullopt;
        result.history.push_back({0, std::numeric_limits<double>::quiet_NaN(), ev.loss, ev.errors, cfg.learning_rate});
    }

    Rng rng(seed);
    PlateauSchedule schedule(cfg.learning_rate, cfg.lr_patience, cfg.stop_patience, cfg.min_delta);
    NesterovState velocity;
    RecordingObjective objective;
    std::vector<double> grad(layout.n_params);
    const int max_epochs = quantization_aware ? cfg.qat_max_epochs : cfg.max_epochs;

    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        if (quantization_aware) {
            qstate = calibrate(model, calib, cfg.calibration);
            act_quant = qstate.activation_quant();
            opts.quant = &act_quant;
        }
        shuffle(std::span(order), rng);
        double train_loss = 0.0;
        for (std::size_t idx : order) {
            const auto& rec = learning.recordings[idx];
            std::fill(grad.begin(), grad.end(), 0.0);
            double loss;
            if (quantization_aware) {
                const auto fq = fake_quant_params(layout, model.params, qstate);
                objective.forward_all(layout, fq.values, rec, opts);
                loss = objective.loss_and_grad(layout, fq.values, rec, opts, grad);
                for (std::size_t k = 0; k < grad.size(); ++k) grad[k] *= fq.pass[k];
            } else {
                objective.forward_all(layout, model.params, rec, opts);
                if (opts.vat) objective.draw_vat(layout, model.params, rec, opts, rng);
                loss = objective.loss_and_grad(layout, model.params, rec, opts, grad);
            }
            if (!std::isfinite(loss)) {
                result.diverged = true;
                break;
            }
            train_loss += loss;
            sgd_step(model.params, grad, velocity, schedule.lr(), cfg.momentum);
        }
        if (result.diverged) break;
        const auto ev = evaluate(model);
        if (!std::isfinite(ev.loss)) {
            result.diverged = true;
            break;
        }
        result.history.push_back({epoch, train_loss / static_cast<double>(order.size()), ev.loss, ev.errors, schedule.lr()});
        if (better(ev.errors, ev.loss, result.best_errors, result.best_loss)) {
            result.best = model;
            result.best_errors = ev.errors;
            result.best_loss = ev.loss;
            result.best_epoch = epoch;
            if (quantization_aware) result.quant_state = qstate;
        }
        if (!schedule.update(ev.loss)) break;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Pipeline

/// A dataset already split into learning and validation parts.
struct SplitData {
    PreparedSet learning;
    PreparedSet validation;
};

inline SplitData prepare_split(const Dataset& dataset, const MetricConfig& metric, double fraction, std::uint64_t seed) {
    const auto split = split_dataset(dataset, fraction, seed);
    return {prepare(split.learning, metric), prepare(split.validation, metric)};
}

struct SeedResult {
    std::uint64_t seed = 0;
    std::optional<PhaseResult> pretrain;
    PhaseResult train;
    std::optional<PhaseResult> qat;
    std::optional<QuantizedModel> quantized;
    SetEvaluation validation;  // final model (quantized when quantizing) on the validation set
    bool converged = true;

    [[nodiscard]] long errors() const { return validation.errors; }
    [[nodiscard]] double loss() const { return validation.loss; }
    /// Validation error rate; runs that did not converge count as 100 %.
    [[nodiscard]] double error_rate() const { return converged ? validation.error_rate() : 1.0; }
};

struct PipelineResult {
    std::vector<SeedResult> seeds;
    std::size_t best_index = 0;

    [[nodiscard]] const SeedResult& best() const { return seeds.at(best_index); }
};

/// Index of the best member: converged runs beat non-converged ones, then (errors, loss).
inline std::size_t select_best(std::span<const SeedResult> seeds) {
    if (seeds.empty()) throw std::invalid_argument("select_best: empty group");
    std::size_t best = 0;
    for (std::size_t i = 1; i < seeds.size(); ++i) {
        const auto& s = seeds[i];
        const auto& b = seeds[best];
        if (s.converged && (!b.converged || better(s.errors(), s.loss(), b.errors(), b.loss()))) best = i;
    }
    return best;
}

/// Network configuration with the activation switch applied.
inline NetworkConfig effective_network(NetworkConfig net, const Improvements& imp) {
    if (!imp.relu6) net.activation_clip = 0.0;
    return net;
}

/// Runs the full chain for one seed.
inline SeedResult train_seed(const NetworkConfig& network, const SplitData& target, const SplitData* pretrain, const TrainConfig& cfg,
                             std::uint64_t seed) {
    const auto& imp = cfg.improvements;
    SeedResult out;
    out.seed = seed;
    Model model = init_params(effective_network(network, imp), derive_seed(seed, 0));
    if (imp.pretrain && pretrain) {
        out.pretrain = train_phase(model, pretrain->learning, pretrain->validation, cfg, derive_seed(seed, 1));
        model = out.pretrain->best;
    }
    out.train = train_phase(model, target.learning, target.validation, cfg, derive_seed(seed, 2));
    // A run that blew up before improving on its initial weights has not converged.
    out.converged = !(out.train.diverged && out.train.best_epoch == 0);
    Predictor pred = float_predictor(out.train.best);
    if (cfg.quantize) {
        out.qat = train_phase(out.train.best, target.learning, target.validation, cfg, derive_seed(seed, 3), true);
        out.quantized = quantize_model(out.qat->best, *out.qat->quant_state);
        pred = quantized_predictor(*out.quantized);
    }
    out.validation = evaluate_set(target.validation, pred, imp.zero_loss, imp.learned_post_filter, imp.post_filter, cfg.min_cycle_s);
    return out;
}

/// Runs `count` independent jobs on up to `threads` workers; results are
/// indexed by job, so output does not depend on the degree of parallelism.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Trains a group of seeds and keeps the best final model by (validation errors, validation loss).
inline PipelineResult train_pipeline(const NetworkConfig& network, const SplitData& target, const SplitData* pretrain, const TrainConfig& cfg) {
    cfg.validate();
    PipelineResult result;
    result.seeds.resize(cfg.group_size);
    parallel_for(cfg.group_size, cfg.threads,
                 [&](std::size_t i) { result.seeds[i] = train_seed(network, target, pretrain, cfg, derive_seed(cfg.seed, 100 + i)); });
    result.best_index = select_best(result.seeds);
    return result;
}

}  // namespace edgar
