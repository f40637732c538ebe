#pragma once

// 8-bit affine quantization, fake-quantized training support and the integer
// inference path.
//
// Integer layer: acc = bias_q + sum (w_q - w_zp) * (x_q - x_zp) in 32 bits,
// requantized with a Q31 fixed-point multiplier, clamped to the clipped-ReLU
// range and max-pooled on int8. Only the final logits leave the integer domain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgar/affine.hpp"
#include "edgar/network.hpp"

namespace edgar {

/// Quantization ranges for every tensor of a network.
struct QuantState {
    QuantParams input;
    std::vector<QuantParams> weights;      // one per layer
    std::vector<QuantParams> activations;  // one per activated layer

    [[nodiscard]] ActivationQuant activation_quant() const { return {input, activations}; }
    friend bool operator==(const QuantState&, const QuantState&) = default;
};

struct CalibrationOptions {
    /// Saturate clipped-ReLU activation ranges reaching past 4 to [0, 4], trading
    /// outliers for one more fractional bit.
    bool saturate_to_pow2 = false;
};

namespace detail {

/// Weight ranges of the current parameters.
inline std::vector<QuantParams> weight_ranges(const NetworkLayout& layout, std::span<const double> params) {
    std::vector<QuantParams> out;
    for (const auto& l : layout.layers)
        out.push_back(choose_quant_params(params.subspan(l.weight_offset, l.weight_count())));
    return out;
}

/// Quantization parameters of the input of each layer.
inline std::vector<QuantParams> layer_input_params(const NetworkLayout& layout, const QuantState& state) {
    std::vector<QuantParams> in;
    std::size_t a = 0;
    QuantParams current = state.input;
    for (const auto& l : layout.layers) {
        in.push_back(current);
        if (l.activated) current = state.activations.at(a++);
    }
    return in;
}

inline std::int32_t quantize_bias(double b, double scale) {
    const double q = std::nearbyint(b / scale);
    constexpr double lim = 1 << 30;
    return static_cast<std::int32_t>(std::clamp(q, -lim, lim));
}

}  // namespace detail

/// Activation ranges observed over `calibration` inputs (float forward),
/// intersected with [0, clip] for clipped layers, plus current weight ranges.
inline QuantState calibrate(const Model& model, std::span<const std::vector<float>> calibration, const CalibrationOptions& options = {}) {
    if (calibration.empty()) throw std::invalid_argument("calibrate: empty calibration set");
    const auto layout = model.layout();
    QuantState state;
    state.weights = detail::weight_ranges(layout, model.params);

    double in_lo = 0.0, in_hi = 0.0;
    std::vector<double> lo(layout.n_activated(), 0.0), hi(layout.n_activated(), 0.0);
    ForwardRecord<double> rec;
    std::vector<double> x(layout.input_len);
    for (const auto& c : calibration) {
        if (c.size() != layout.input_len) throw std::invalid_argument("calibrate: candidate length mismatch");
        std::copy(c.begin(), c.end(), x.begin());
        for (double v : x) {
            in_lo = std::min(in_lo, v);
            in_hi = std::max(in_hi, v);
        }
        forward<double>(layout, model.params, x, rec);
        std::size_t a = 0;
        for (std::size_t li = 0; li < layout.layers.size(); ++li) {
            if (!layout.layers[li].activated) continue;
            const auto [mn, mx] = std::minmax_element(rec.act[li].begin(), rec.act[li].end());
            lo[a] = std::min(lo[a], *mn);
            hi[a] = std::max(hi[a], *mx);
            ++a;
        }
    }
    state.input = choose_quant_params(in_lo, in_hi);
    for (std::size_t a = 0; a < lo.size(); ++a) {
        double h = hi[a];
        if (layout.clip > 0.0) h = std::min(h, layout.clip);
        if (options.saturate_to_pow2 && layout.clip > 0.0 && h > 4.0) h = 4.0;
        if (h <= 0.0) h = layout.clip > 0.0 ? layout.clip : 1.0;  // dead layer: any positive range works
        state.activations.push_back(choose_quant_params(std::max(0.0, lo[a]), h));
    }
    return state;
}

/// Parameters as the quantized network sees them, and the straight-through
/// mask (1 where the float weight lies inside its quantization range).
struct FakeQuantParams {
    std::vector<double> values;
    std::vector<double> pass;
};

inline FakeQuantParams fake_quant_params(const NetworkLayout& layout, std::span<const double> params, const QuantState& state) {
    if (state.weights.size() != layout.layers.size()) throw std::invalid_argument("fake_quant_params: weight range count mismatch");
    FakeQuantParams out{std::vector<double>(params.begin(), params.end()), std::vector<double>(params.size(), 1.0)};
    const auto inputs = detail::layer_input_params(layout, state);
    for (std::size_t li = 0; li < layout.layers.size(); ++li) {
        const auto& l = layout.layers[li];
        const auto& wq = state.weights[li];
        for (std::size_t i = 0; i < l.weight_count(); ++i) {
            const std::size_t k = l.weight_offset + i;
            out.pass[k] = wq.in_range(params[k]) ? 1.0 : 0.0;
            out.values[k] = wq.fake(params[k]);
        }
        const double bias_scale = wq.scale * inputs[li].scale;
        for (std::size_t o = 0; o < l.out_channels; ++o) {
            const std::size_t k = l.bias_offset + o;
            out.values[k] = bias_scale * detail::quantize_bias(params[k], bias_scale);
        }
    }
    return out;
}

/// Forward pass with quantize/dequantize on weights, input and activations.
inline std::vector<double> fake_quant_forward(const Model& model, const QuantState& state, std::span<const float> x) {
    const auto layout = model.layout();
    const auto fq = fake_quant_params(layout, model.params, state);
    const auto act = state.activation_quant();
    const std::vector<double> xd(x.begin(), x.end());
    return predict<double>(layout, fq.values, xd, &act);
}

// ---------------------------------------------------------------------------
// Integer model

struct QuantizedLayer {
    LayerShape shape;
    QuantParams weight_q;
    QuantParams input_q;
    QuantParams output_q;  // activated layers only
    std::vector<std::int8_t> weights;
    std::vector<std::int32_t> bias;
    std::int32_t multiplier = 0;  // Q31 mantissa of input_scale * weight_scale / output_scale
    std::int32_t shift = 0;
    std::int32_t act_min = qmin;
    std::int32_t act_max = qmax;

    friend bool operator==(const QuantizedLayer&, const QuantizedLayer&) = default;
};

struct QuantizedModel {
    NetworkConfig config;
    QuantState state;
    std::vector<QuantizedLayer> layers;

    /// Bytes of scratch memory qforward needs (two int8 activation buffers plus logits and probabilities).
    [[nodiscard]] std::size_t scratch_bytes() const {
        std::size_t a = 0, b = 0;
        for (const auto& l : layers) {
            a = std::max({a, l.shape.in_size(), l.shape.out_size()});
            b = std::max(b, l.shape.conv_size());
        }
        return a + b + 2 * config.n_categories * sizeof(float);
    }

    friend bool operator==(const QuantizedModel&, const QuantizedModel&) = default;
};

/// M = mantissa * 2^(shift - 31), mantissa in [2^30, 2^31).
inline void quantize_multiplier(double m, std::int32_t& mantissa, std::int32_t& shift) {
    if (!(m > 0.0) || !std::isfinite(m)) {
        mantissa = 0;
        shift = 0;
        return;
    }
    int exp = 0;
    const double q = std::frexp(m, &exp);
    auto q_fixed = static_cast<std::int64_t>(std::llround(q * static_cast<double>(std::int64_t{1} << 31)));
    if (q_fixed == (std::int64_t{1} << 31)) {
        q_fixed /= 2;
        ++exp;
    }
    if (exp > 30) throw std::overflow_error("requantization multiplier too large");
    if (exp < -31) {
        q_fixed = 0;
        exp = 0;
    }
    mantissa = static_cast<std::int32_t>(q_fixed);
    shift = exp;
}

/// round(acc * mantissa * 2^(shift - 31)), ties away from zero.
inline std::int32_t apply_multiplier(std::int32_t acc, std::int32_t mantissa, std::int32_t shift) {
    const std::int64_t prod = static_cast<std::int64_t>(acc) * mantissa;
    const int total = 31 - shift;
    if (total <= 0) return static_cast<std::int32_t>(prod << -total);
    const std::int64_t half = std::int64_t{1} << (total - 1);
    const std::int64_t r = prod >= 0 ? (prod + half) >> total : -((-prod + half) >> total);
    return static_cast<std::int32_t>(std::clamp<std::int64_t>(r, INT32_MIN, INT32_MAX));
}

/// Freezes `model` with the ranges in `state` into integer tensors. Weights
/// outside their range saturate, exactly as in fake_quant_forward.
inline QuantizedModel quantize_model(const Model& model, const QuantState& state) {
    const auto layout = model.layout();
    if (state.weights.size() != layout.layers.size() || state.activations.size() != layout.n_activated())
        throw std::invalid_argument("quantize_model: quantization state does not match the network");
    QuantizedModel q{model.config, state, {}};
    const auto inputs = detail::layer_input_params(layout, state);
    std::size_t a = 0;
    for (std::size_t li = 0; li < layout.layers.size(); ++li) {
        const auto& l = layout.layers[li];
        QuantizedLayer ql;
        ql.shape = l;
        ql.weight_q = state.weights[li];
        ql.input_q = inputs[li];
        ql.weights.resize(l.weight_count());
        for (std::size_t i = 0; i < l.weight_count(); ++i)
            ql.weights[i] = static_cast<std::int8_t>(ql.weight_q.quantize(model.params[l.weight_offset + i]));
        const double acc_scale = ql.weight_q.scale * ql.input_q.scale;
        ql.bias.resize(l.out_channels);
        for (std::size_t o = 0; o < l.out_channels; ++o) ql.bias[o] = detail::quantize_bias(model.params[l.bias_offset + o], acc_scale);

        // |acc| <= fan_in * 255 * 255 + |bias| must fit in 32 bits.
        const double bound = static_cast<double>(l.fan_in()) * 255.0 * 255.0 + static_cast<double>(1 << 30);
        if (bound > static_cast<double>(INT32_MAX))
            throw std::overflow_error("layer " + std::to_string(li) + ": fan-in " + std::to_string(l.fan_in()) +
                                      " can overflow the 32-bit accumulator");
        if (l.activated) {
            ql.output_q = state.activations[a++];
            quantize_multiplier(acc_scale / ql.output_q.scale, ql.multiplier, ql.shift);
            ql.act_min = std::max(qmin, ql.output_q.quantize(0.0));
            ql.act_max = layout.clip > 0.0 ? std::min(qmax, ql.output_q.quantize(layout.clip)) : qmax;
        }
        q.layers.push_back(std::move(ql));
    }
    return q;
}

inline QuantizedModel calibrate_and_quantize(const Model& model, std::span<const std::vector<float>> calibration,
                                             const CalibrationOptions& options = {}) {
    return quantize_model(model, calibrate(model, calibration, options));
}

/// Fixed working memory for qforward; sized once per model.
class QuantScratch {
public:
    QuantScratch() = default;
    explicit QuantScratch(const QuantizedModel& model) {
        std::size_t a = 0, b = 0;
        for (const auto& l : model.layers) {
            a = std::max({a, l.shape.in_size(), l.shape.out_size()});
            b = std::max(b, l.shape.conv_size());
        }
        act_.assign(a, 0);
        conv_.assign(b, 0);
        logits_.assign(model.config.n_categories, 0.0f);
        probs_.assign(model.config.n_categories, 0.0f);
    }

    [[nodiscard]] std::size_t bytes() const noexcept {
        return act_.size() + conv_.size() + (logits_.size() + probs_.size()) * sizeof(float);
    }

private:
    friend std::span<const float> qforward(const QuantizedModel&, std::span<const float>, QuantScratch&);
    std::vector<std::int8_t> act_;
    std::vector<std::int8_t> conv_;
    std::vector<float> logits_;
    std::vector<float> probs_;
};

/// Integer inference. Returns a view of the probabilities inside `scratch`.
/// Performs no allocation.
inline std::span<const float> qforward(const QuantizedModel& model, std::span<const float> x, QuantScratch& scratch) {
    if (model.layers.empty()) throw std::logic_error("qforward: empty model");
    const auto& first = model.layers.front();
    if (x.size() != first.shape.in_len) throw std::invalid_argument("qforward: input length mismatch");
    if (scratch.logits_.size() != model.config.n_categories || scratch.act_.size() < first.shape.in_size())
        throw std::invalid_argument("qforward: scratch was sized for a different model");

    for (std::size_t i = 0; i < x.size(); ++i) scratch.act_[i] = static_cast<std::int8_t>(first.input_q.quantize(x[i]));

    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const auto& ql = model.layers[li];
        const auto& l = ql.shape;
        const std::int32_t in_zp = ql.input_q.zero_point;
        const std::int32_t w_zp = ql.weight_q.zero_point;
        const bool last = li + 1 == model.layers.size();
        for (std::size_t o = 0; o < l.out_channels; ++o) {
            for (std::size_t t = 0; t < l.conv_len; ++t) {
                std::int32_t acc = ql.bias[o];
                for (std::size_t i = 0; i < l.in_channels; ++i) {
                    const std::int8_t* w = ql.weights.data() + (o * l.in_channels + i) * l.kernel;
                    const std::int8_t* xs = scratch.act_.data() + i * l.in_len + t;
                    for (std::size_t k = 0; k < l.kernel; ++k) acc += (static_cast<std::int32_t>(w[k]) - w_zp) * (static_cast<std::int32_t>(xs[k]) - in_zp);
                }
                if (last) {
                    scratch.logits_[o] = static_cast<float>(static_cast<double>(acc) * ql.weight_q.scale * ql.input_q.scale);
                } else if (l.activated) {
                    const std::int32_t y = ql.output_q.zero_point + apply_multiplier(acc, ql.multiplier, ql.shift);
                    scratch.conv_[o * l.conv_len + t] = static_cast<std::int8_t>(std::clamp(y, ql.act_min, ql.act_max));
                }
            }
        }
        if (last) break;
        for (std::size_t c = 0; c < l.out_channels; ++c)
            for (std::size_t j = 0; j < l.out_len; ++j) {
                std::int8_t best = scratch.conv_[c * l.conv_len + j * l.pool];
                for (std::size_t k = 1; k < l.pool; ++k) best = std::max(best, scratch.conv_[c * l.conv_len + j * l.pool + k]);
                scratch.act_[c * l.out_len + j] = best;
            }
    }
    const float mx = *std::max_element(scratch.logits_.begin(), scratch.logits_.end());
    float sum = 0.0f;
    for (std::size_t c = 0; c < scratch.logits_.size(); ++c) {
        scratch.probs_[c] = std::exp(scratch.logits_[c] - mx);
        sum += scratch.probs_[c];
    }
    for (auto& p : scratch.probs_) p /= sum;
    return scratch.probs_;
}

}  // namespace edgar
