#pragma once

// Model container: "EDMD", u32 version, network config, metric config,
// minimum cycle time, category names, float parameters, then optionally the
// quantization ranges and the integer tensors of every layer, "EDME" trailer.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "edgar/binary_io.hpp"
#include "edgar/dataset_io.hpp"
#include "edgar/network.hpp"
#include "edgar/preprocess.hpp"
#include "edgar/quant.hpp"

namespace edgar {

inline constexpr std::uint32_t model_format_version = 1;

struct ModelBundle {
    Model model;
    MetricConfig metric;
    double min_cycle_s = 0.040;
    std::vector<std::string> category_names{"non-shot", "shot"};
    std::optional<QuantizedModel> quantized;

    [[nodiscard]] const QuantizedModel& require_quantized() const {
        if (!quantized) throw std::invalid_argument("model has no quantized form; run quantize first");
        return *quantized;
    }
};

namespace detail {

inline void put_qp(io::Writer& w, const QuantParams& q) {
    w.put<double>(q.scale);
    w.put<std::int32_t>(q.zero_point);
}

inline QuantParams get_qp(io::Reader& r) {
    QuantParams q;
    q.scale = r.get<double>();
    q.zero_point = r.get<std::int32_t>();
    if (!(q.scale > 0.0) || q.zero_point < qmin || q.zero_point > qmax) throw format_error("invalid quantization parameters");
    return q;
}

}  // namespace detail

inline void write_model(std::ostream& out, const ModelBundle& b) {
    io::Writer w(out);
    w.bytes("EDMD", 4);
    w.put<std::uint32_t>(model_format_version);
    const auto& n = b.model.config;
    w.put<std::uint64_t>(n.input_len);
    w.put<std::uint64_t>(n.conv.size());
    for (const auto& c : n.conv) {
        w.put<std::uint64_t>(c.kernel);
        w.put<std::uint64_t>(c.channels);
        w.put<std::uint64_t>(c.pool);
    }
    w.put<std::uint64_t>(n.hidden);
    w.put<std::uint64_t>(n.n_categories);
    w.put<double>(n.activation_clip);
    const auto& m = b.metric;
    w.put<std::uint64_t>(m.window);
    w.put<std::int64_t>(m.offset);
    w.put<double>(m.high_threshold);
    w.put<double>(m.low_threshold);
    w.put<std::uint64_t>(m.input_len);
    w.put<std::uint64_t>(m.pre_trigger);
    w.put<double>(b.min_cycle_s);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(b.category_names.size()));
    for (const auto& s : b.category_names) w.string(s);
    w.array(b.model.params);
    w.put<std::uint8_t>(b.quantized ? 1 : 0);
    if (b.quantized) {
        const auto& st = b.quantized->state;
        detail::put_qp(w, st.input);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(st.weights.size()));
        for (const auto& q : st.weights) detail::put_qp(w, q);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(st.activations.size()));
        for (const auto& q : st.activations) detail::put_qp(w, q);
        for (const auto& l : b.quantized->layers) {
            w.array(l.weights);
            w.array(l.bias);
            w.put<std::int32_t>(l.multiplier);
            w.put<std::int32_t>(l.shift);
            w.put<std::int32_t>(l.act_min);
            w.put<std::int32_t>(l.act_max);
        }
    }
    w.bytes("EDME", 4);
    w.check();
}

inline ModelBundle read_model(std::istream& in) {
    io::Reader r(in);
    r.expect_magic("EDMD", "model");
    if (const auto v = r.get<std::uint32_t>(); v != model_format_version)
        throw version_error("model format version " + std::to_string(v) + " is not supported (expected " +
                            std::to_string(model_format_version) + ")");
    ModelBundle b;
    auto& n = b.model.config;
    n.input_len = r.get<std::uint64_t>();
    const auto n_conv = r.get<std::uint64_t>();
    if (n_conv > 64) throw format_error("too many convolution blocks");
    n.conv.resize(n_conv);
    for (auto& c : n.conv) {
        c.kernel = r.get<std::uint64_t>();
        c.channels = r.get<std::uint64_t>();
        c.pool = r.get<std::uint64_t>();
    }
    n.hidden = r.get<std::uint64_t>();
    n.n_categories = r.get<std::uint64_t>();
    n.activation_clip = r.get<double>();
    auto& m = b.metric;
    m.window = r.get<std::uint64_t>();
    m.offset = r.get<std::int64_t>();
    m.high_threshold = r.get<double>();
    m.low_threshold = r.get<double>();
    m.input_len = r.get<std::uint64_t>();
    m.pre_trigger = r.get<std::uint64_t>();
    b.min_cycle_s = r.get<double>();
    const auto n_names = r.get<std::uint32_t>();
    if (n_names > 1024) throw format_error("too many category names");
    b.category_names.resize(n_names);
    for (auto& s : b.category_names) s = r.string(4096);

    NetworkLayout layout;
    try {
        layout = make_layout(n);
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("invalid model configuration: ") + e.what());
    }
    if (b.category_names.size() != n.n_categories) throw format_error("category names do not match the network outputs");
    b.model.params = r.array<double>(layout.n_params);
    if (b.model.params.size() != layout.n_params) throw format_error("parameter count does not match the network");
    if (r.get<std::uint8_t>() != 0) {
        QuantState q;
        q.input = detail::get_qp(r);
        const auto nw = r.get<std::uint32_t>();
        if (nw != layout.layers.size()) throw format_error("weight quantizer count does not match the network");
        for (std::uint32_t i = 0; i < nw; ++i) q.weights.push_back(detail::get_qp(r));
        const auto na = r.get<std::uint32_t>();
        if (na != layout.n_activated()) throw format_error("activation quantizer count does not match the network");
        for (std::uint32_t i = 0; i < na; ++i) q.activations.push_back(detail::get_qp(r));
        QuantizedModel qm{n, q, {}};
        const auto inputs = detail::layer_input_params(layout, q);
        std::size_t a = 0;
        for (std::size_t li = 0; li < layout.layers.size(); ++li) {
            const auto& l = layout.layers[li];
            QuantizedLayer ql;
            ql.shape = l;
            ql.weight_q = q.weights[li];
            ql.input_q = inputs[li];
            if (l.activated) ql.output_q = q.activations[a++];
            ql.weights = r.array<std::int8_t>(l.weight_count());
            ql.bias = r.array<std::int32_t>(l.out_channels);
            if (ql.weights.size() != l.weight_count() || ql.bias.size() != l.out_channels)
                throw format_error("layer " + std::to_string(li) + ": integer tensor size does not match the network");
            ql.multiplier = r.get<std::int32_t>();
            ql.shift = r.get<std::int32_t>();
            ql.act_min = r.get<std::int32_t>();
            ql.act_max = r.get<std::int32_t>();
            qm.layers.push_back(std::move(ql));
        }
        b.quantized = std::move(qm);
    }
    r.expect_magic("EDME", "model (missing trailer)");
    return b;
}

inline void save_model(const std::filesystem::path& path, const ModelBundle& b) {
    write_atomically(path, [&](std::ostream& out) { write_model(out, b); });
}

inline ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return read_model(in);
}

}  // namespace edgar
