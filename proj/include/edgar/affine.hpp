#pragma once

// Per-tensor affine 8-bit quantization: real = scale * (q - zero_point),
// q in [-128, 127].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

namespace edgar {

inline constexpr std::int32_t qmin = -128;
inline constexpr std::int32_t qmax = 127;

struct QuantParams {
    double scale = 1.0;
    std::int32_t zero_point = 0;

    [[nodiscard]] std::int32_t quantize(double v) const noexcept {
        const double q = std::nearbyint(v / scale) + zero_point;
        return static_cast<std::int32_t>(std::clamp(q, static_cast<double>(qmin), static_cast<double>(qmax)));
    }
    [[nodiscard]] double dequantize(std::int32_t q) const noexcept { return scale * static_cast<double>(q - zero_point); }
    [[nodiscard]] double fake(double v) const noexcept { return dequantize(quantize(v)); }
    /// Real interval covered by the integer range.
    [[nodiscard]] double lo() const noexcept { return dequantize(qmin); }
    [[nodiscard]] double hi() const noexcept { return dequantize(qmax); }
    /// True when quantizing `v` does not clamp (the straight-through region).
    [[nodiscard]] bool in_range(double v) const noexcept {
        const double q = std::nearbyint(v / scale) + zero_point;
        return q >= qmin && q <= qmax;
    }

    friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

/// Parameters covering [lo, hi] (widened to include 0 so zero is exact). A
/// degenerate range holding a single value v maps v to q = +-1 with scale |v|,
/// so constant tensors dequantize exactly.
inline QuantParams choose_quant_params(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) throw std::invalid_argument("choose_quant_params: invalid range");
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
    QuantParams p;
    if (hi - lo == 0.0) return p;  // all zeros: scale 1, q = 0
    p.scale = (hi - lo) / static_cast<double>(qmax - qmin);
    const double zp = static_cast<double>(qmin) - lo / p.scale;
    p.zero_point = static_cast<std::int32_t>(std::clamp(std::nearbyint(zp), static_cast<double>(qmin), static_cast<double>(qmax)));
    return p;
}

inline QuantParams choose_quant_params(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("choose_quant_params: empty tensor");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (*mn == *mx && *mn != 0.0) {
        QuantParams p;
        p.scale = std::abs(*mn);
        p.zero_point = 0;
        return p;
    }
    return choose_quant_params(*mn, *mx);
}

}  // namespace edgar
