#pragma once

// Small 1-D CNN with hand-written reverse-mode gradients.
//
//   [conv (valid, stride 1) -> clipped ReLU -> max-pool] x blocks
//   -> flatten -> dense -> clipped ReLU -> dense -> softmax
//
// Every layer is stored as a convolution: a dense layer over a flattened
// [channels][length] map is a convolution whose kernel spans the full length,
// and the weight layout [out][in][k] then matches the flatten order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgar/affine.hpp"
#include "edgar/random.hpp"

namespace edgar {

struct ConvBlock {
    std::size_t kernel = 9;
    std::size_t channels = 18;
    std::size_t pool = 2;
    friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

struct NetworkConfig {
    std::size_t input_len = 232;
    std::vector<ConvBlock> conv{{9, 18, 2}, {9, 18, 2}, {9, 18, 2}};
    std::size_t hidden = 64;
    std::size_t n_categories = 2;
    double activation_clip = 6.0;  // ReLU6 by default; <= 0 selects an unbounded ReLU

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct LayerShape {
    std::size_t in_channels = 0;
    std::size_t in_len = 0;
    std::size_t kernel = 0;
    std::size_t out_channels = 0;
    std::size_t conv_len = 0;  // in_len - kernel + 1
    std::size_t pool = 1;
    std::size_t out_len = 0;  // conv_len / pool
    bool activated = true;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    [[nodiscard]] std::size_t weight_count() const noexcept { return out_channels * in_channels * kernel; }
    [[nodiscard]] std::size_t fan_in() const noexcept { return in_channels * kernel; }
    [[nodiscard]] std::size_t in_size() const noexcept { return in_channels * in_len; }
    [[nodiscard]] std::size_t conv_size() const noexcept { return out_channels * conv_len; }
    [[nodiscard]] std::size_t out_size() const noexcept { return out_channels * out_len; }
    friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

struct NetworkLayout {
    std::vector<LayerShape> layers;
    std::size_t n_params = 0;
    std::size_t input_len = 0;
    std::size_t n_outputs = 0;
    double clip = 6.0;

    [[nodiscard]] std::size_t n_activated() const noexcept {
        return static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(), [](const LayerShape& l) { return l.activated; }));
    }
};

inline NetworkLayout make_layout(const NetworkConfig& cfg) {
    if (cfg.n_categories < 2) throw std::invalid_argument("network needs at least two categories");
    if (cfg.input_len < 1) throw std::invalid_argument("network input length must be >= 1");
    if (cfg.hidden < 1) throw std::invalid_argument("hidden layer needs at least one unit");
    NetworkLayout layout;
    layout.input_len = cfg.input_len;
    layout.n_outputs = cfg.n_categories;
    layout.clip = cfg.activation_clip;
    std::size_t channels = 1, len = cfg.input_len, offset = 0;
    auto add = [&](std::size_t kernel, std::size_t out_channels, std::size_t pool, bool activated, const std::string& what) {
        if (kernel < 1 || out_channels < 1 || pool < 1) throw std::invalid_argument(what + ": kernel, channels and pool must be >= 1");
        if (kernel > len)
            throw std::invalid_argument(what + ": kernel " + std::to_string(kernel) + " exceeds input length " + std::to_string(len));
        LayerShape l;
        l.in_channels = channels;
        l.in_len = len;
        l.kernel = kernel;
        l.out_channels = out_channels;
        l.conv_len = len - kernel + 1;
        l.pool = pool;
        l.out_len = l.conv_len / pool;
        if (l.out_len < 1) throw std::invalid_argument(what + ": output length would be zero");
        l.activated = activated;
        l.weight_offset = offset;
        offset += l.weight_count();
        l.bias_offset = offset;
        offset += out_channels;
        layout.layers.push_back(l);
        channels = out_channels;
        len = l.out_len;
    };
    for (std::size_t i = 0; i < cfg.conv.size(); ++i)
        add(cfg.conv[i].kernel, cfg.conv[i].channels, cfg.conv[i].pool, true, "conv block " + std::to_string(i));
    add(len, cfg.hidden, 1, true, "hidden dense layer");
    add(1, cfg.n_categories, 1, false, "output layer");
    layout.n_params = offset;
    return layout;
}

inline std::size_t param_count(const NetworkConfig& cfg) { return make_layout(cfg).n_params; }

struct Model {
    NetworkConfig config;
    std::vector<double> params;

    [[nodiscard]] NetworkLayout layout() const { return make_layout(config); }
    friend bool operator==(const Model&, const Model&) = default;
};

/// Uniform in +-sqrt(6 / fan_in) for weights, zero biases.
inline Model init_params(const NetworkConfig& cfg, std::uint64_t seed) {
    const auto layout = make_layout(cfg);
    Model model{cfg, std::vector<double>(layout.n_params, 0.0)};
    Rng rng(seed);
    for (const auto& l : layout.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l.fan_in()));
        for (std::size_t i = 0; i < l.weight_count(); ++i) model.params[l.weight_offset + i] = uniform(rng, -limit, limit);
    }
    return model;
}

/// Optional fake quantization of the input and every activated layer output,
/// with a straight-through estimator: gradients pass inside the range, zero outside.
struct ActivationQuant {
    QuantParams input;
    std::vector<QuantParams> activations;  // one per activated layer, in order
};

template <class Real>
struct ForwardRecord {
    std::vector<std::vector<Real>> inputs;  // inputs[l]: what layer l consumed
    std::vector<std::vector<Real>> pre;     // conv outputs before activation
    std::vector<std::vector<Real>> act;     // activated (and fake-quantized) outputs before pooling
    std::vector<std::vector<Real>> pass;    // activation derivative (0/1) including the STE
    std::vector<std::vector<std::uint32_t>> pool_index;
    std::vector<Real> input_pass;  // STE mask on the network input
    std::vector<Real> logits;
    std::vector<Real> probs;
    bool valid = false;

    void reset_shape(const NetworkLayout& layout) {
        const auto n = layout.layers.size();
        inputs.resize(n);
        pre.resize(n);
        act.resize(n);
        pass.resize(n);
        pool_index.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& l = layout.layers[i];
            inputs[i].resize(l.in_size());
            pre[i].resize(l.conv_size());
            act[i].resize(l.conv_size());
            pass[i].resize(l.conv_size());
            pool_index[i].resize(l.out_size());
        }
        input_pass.resize(layout.input_len);
        logits.resize(layout.n_outputs);
        probs.resize(layout.n_outputs);
    }
};

template <class Real>
void softmax(std::span<const Real> logits, std::span<Real> probs) {
    const Real mx = *std::max_element(logits.begin(), logits.end());
    Real sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (auto& p : probs) p /= sum;
}

/// Maps a gradient on the softmax output to a gradient on the logits.
template <class Real>
void softmax_backward(std::span<const Real> probs, std::span<const Real> dprobs, std::span<Real> dlogits) {
    Real dot = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * dprobs[i];
    for (std::size_t i = 0; i < probs.size(); ++i) dlogits[i] = probs[i] * (dprobs[i] - dot);
}

namespace detail {

template <class Real>
void conv_forward(const LayerShape& l, std::span<const Real> params, const Real* in, Real* out) {
    const Real* w = params.data() + l.weight_offset;
    const Real* b = params.data() + l.bias_offset;
    for (std::size_t o = 0; o < l.out_channels; ++o) {
        Real* y = out + o * l.conv_len;
        std::fill(y, y + l.conv_len, b[o]);
        for (std::size_t i = 0; i < l.in_channels; ++i) {
            const Real* wk = w + (o * l.in_channels + i) * l.kernel;
            const Real* x = in + i * l.in_len;
            for (std::size_t k = 0; k < l.kernel; ++k) {
                const Real wv = wk[k];
                const Real* xs = x + k;
                for (std::size_t t = 0; t < l.conv_len; ++t) y[t] += wv * xs[t];
            }
        }
    }
}

}  // namespace detail

/// Runs the network on `x`, filling `rec` with everything backward() needs.
template <class Real>
void forward(const NetworkLayout& layout, std::span<const Real> params, std::span<const Real> x, ForwardRecord<Real>& rec,
             const ActivationQuant* quant = nullptr) {
    if (x.size() != layout.input_len)
        throw std::invalid_argument("forward: input has " + std::to_string(x.size()) + " samples, network expects " +
                                    std::to_string(layout.input_len));
    if (params.size() != layout.n_params) throw std::invalid_argument("forward: parameter count mismatch");
    if (quant && quant->activations.size() != layout.n_activated())
        throw std::invalid_argument("forward: activation quantizer count mismatch");
    rec.reset_shape(layout);
    rec.valid = false;

    auto& first = rec.inputs[0];
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (quant) {
            first[i] = static_cast<Real>(quant->input.fake(x[i]));
            rec.input_pass[i] = quant->input.in_range(x[i]) ? Real(1) : Real(0);
        } else {
            first[i] = x[i];
            rec.input_pass[i] = 1;
        }
    }

    const bool clipped = layout.clip > 0.0;
    const Real clip = static_cast<Real>(layout.clip);
    std::size_t act_index = 0;
    for (std::size_t li = 0; li < layout.layers.size(); ++li) {
        const auto& l = layout.layers[li];
        auto& z = rec.pre[li];
        auto& a = rec.act[li];
        auto& pass = rec.pass[li];
        detail::conv_forward(l, params, rec.inputs[li].data(), z.data());
        if (l.activated) {
            const QuantParams* q = quant ? &quant->activations[act_index] : nullptr;
            ++act_index;
            for (std::size_t i = 0; i < z.size(); ++i) {
                const Real v = z[i];
                Real y;
                Real d;
                if (v <= Real(0)) {
                    y = 0;
                    d = 0;
                } else if (clipped && v >= clip) {
                    y = clip;
                    d = 0;
                } else {
                    y = v;
                    d = 1;
                }
                if (q) {
                    if (!q->in_range(y)) d = 0;
                    y = static_cast<Real>(q->fake(y));
                }
                a[i] = y;
                pass[i] = d;
            }
        } else {
            std::copy(z.begin(), z.end(), a.begin());
            std::fill(pass.begin(), pass.end(), Real(1));
        }

        Real* out = li + 1 < layout.layers.size() ? rec.inputs[li + 1].data() : rec.logits.data();
        auto& idx = rec.pool_index[li];
        for (std::size_t c = 0; c < l.out_channels; ++c) {
            const Real* src = a.data() + c * l.conv_len;
            for (std::size_t j = 0; j < l.out_len; ++j) {
                std::size_t best = j * l.pool;
                for (std::size_t k = best + 1; k < (j + 1) * l.pool; ++k)
                    if (src[k] > src[best]) best = k;
                idx[c * l.out_len + j] = static_cast<std::uint32_t>(best);
                out[c * l.out_len + j] = src[best];
            }
        }
    }
    softmax<Real>(rec.logits, rec.probs);
    rec.valid = true;
}

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits) for the
/// recorded forward pass; writes d(loss)/d(x) into `dx` when it is non-empty.
/// An empty `grad` skips the parameter gradient (input gradient only).
template <class Real>
void backward(const NetworkLayout& layout, std::span<const Real> params, const ForwardRecord<Real>& rec, std::span<const Real> dlogits,
              std::span<Real> grad, std::span<Real> dx = {}) {
    if (!rec.valid) throw std::logic_error("backward: no forward pass recorded");
    if (rec.inputs.size() != layout.layers.size() || rec.logits.size() != layout.n_outputs)
        throw std::logic_error("backward: forward record does not match this network");
    if (dlogits.size() != layout.n_outputs) throw std::invalid_argument("backward: gradient size mismatch");
    const bool want_params = !grad.empty();
    if (want_params && grad.size() != layout.n_params) throw std::invalid_argument("backward: gradient buffer size mismatch");
    if (!dx.empty() && dx.size() != layout.input_len) throw std::invalid_argument("backward: input gradient size mismatch");

    thread_local std::vector<Real> dout, dz, din;
    dout.assign(dlogits.begin(), dlogits.end());
    for (std::size_t li = layout.layers.size(); li-- > 0;) {
        const auto& l = layout.layers[li];
        dz.assign(l.conv_size(), Real(0));
        const auto& idx = rec.pool_index[li];
        for (std::size_t c = 0; c < l.out_channels; ++c)
            for (std::size_t j = 0; j < l.out_len; ++j) dz[c * l.conv_len + idx[c * l.out_len + j]] += dout[c * l.out_len + j];
        const auto& pass = rec.pass[li];
        for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= pass[i];

        const bool need_input_grad = li > 0 || !dx.empty();
        if (need_input_grad) din.assign(l.in_size(), Real(0));
        const Real* in = rec.inputs[li].data();
        const Real* w = params.data() + l.weight_offset;
        Real* gw = want_params ? grad.data() + l.weight_offset : nullptr;
        Real* gb = want_params ? grad.data() + l.bias_offset : nullptr;
        for (std::size_t o = 0; o < l.out_channels; ++o) {
            const Real* g = dz.data() + o * l.conv_len;
            if (want_params) {
                Real bsum = 0;
                for (std::size_t t = 0; t < l.conv_len; ++t) bsum += g[t];
                gb[o] += bsum;
            }
            for (std::size_t i = 0; i < l.in_channels; ++i) {
                const Real* x = in + i * l.in_len;
                const Real* wk = w + (o * l.in_channels + i) * l.kernel;
                for (std::size_t k = 0; k < l.kernel; ++k) {
                    if (want_params) {
                        const Real* xs = x + k;
                        Real acc = 0;
                        for (std::size_t t = 0; t < l.conv_len; ++t) acc += g[t] * xs[t];
                        gw[(o * l.in_channels + i) * l.kernel + k] += acc;
                    }
                    if (need_input_grad) {
                        Real* ds = din.data() + i * l.in_len + k;
                        const Real wv = wk[k];
                        for (std::size_t t = 0; t < l.conv_len; ++t) ds[t] += wv * g[t];
                    }
                }
            }
        }
        if (li > 0) dout.swap(din);
    }
    if (!dx.empty())
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = din[i] * rec.input_pass[i];
}

/// Convenience forward that returns the probability vector.
template <class Real>
std::vector<Real> predict(const NetworkLayout& layout, std::span<const Real> params, std::span<const Real> x,
                          const ActivationQuant* quant = nullptr) {
    ForwardRecord<Real> rec;
    forward(layout, params, x, rec, quant);
    return rec.probs;
}

inline std::vector<double> predict(const Model& model, std::span<const float> x) {
    const std::vector<double> xd(x.begin(), x.end());
    return predict<double>(model.layout(), model.params, xd);
}

/// Index of the largest element; ties resolve to the lowest index (non-shot first).
template <class Range>
std::size_t argmax(const Range& v) {
    return static_cast<std::size_t>(std::max_element(std::begin(v), std::end(v)) - std::begin(v));
}

}  // namespace edgar
