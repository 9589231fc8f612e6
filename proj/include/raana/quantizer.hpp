#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "raana/core.hpp"

namespace raana {

/// Grid midpoint c_b = (2^b - 1) / 2; codes are centered by subtracting it.
inline double grid_midpoint(int bits) {
    return double((1u << bits) - 1u) * 0.5;
}

inline constexpr int kDefaultGridSteps = 64;

template <typename T>
struct ColumnCode {
    std::vector<std::uint16_t> codes;  // each in [0, 2^bits)
    int bits = 0;
    T rescale = T(0);  // >= 0; zero only for the all-zero column
};

namespace detail {

inline void check_bit_width(int bits) {
    if (bits < 1 || bits > 15)
        throw invalid_bit_width_error("bit width " + std::to_string(bits) +
                                      " outside supported range [1, 15]");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Column quantization: scale-grid search.
//
// Candidate steps are delta_g = g * delta_max / G with
// delta_max = 2 * max|w_i| / (2^b - 1). For each step the codes are
// u_i = clamp(round(w_i / delta + c_b), 0, 2^b - 1) with deterministic
// round-half-up ties, and the rescale is the closed-form least-squares
// optimum t* = <w, v> / |v|^2 over v = u - c_b. The (u, t*) pair with the
// smallest squared reconstruction error wins.
// ---------------------------------------------------------------------------

template <typename T>
ColumnCode<T> quantize_column(std::span<const T> w, int bits,
                              int grid_steps = kDefaultGridSteps) {
    detail::check_bit_width(bits);
    if (w.empty()) throw invalid_dimension_error("quantize_column: empty input");
    if (grid_steps < 1) throw invalid_config_error("quantize_column: grid_steps must be >= 1");

    const std::size_t d = w.size();
    double max_abs = 0.0;
    double sum_ww = 0.0;
    for (const T& v : w) {
        const double x = double(v);
        if (!std::isfinite(x)) throw invalid_input_error("quantize_column: non-finite input");
        max_abs = std::max(max_abs, std::fabs(x));
        sum_ww += x * x;
    }

    ColumnCode<T> out;
    out.bits = bits;
    if (max_abs == 0.0) {
        out.codes.assign(d, 0);
        out.rescale = T(0);
        return out;
    }

    const double levels = double((1u << bits) - 1u);
    const double cb = grid_midpoint(bits);
    const double delta_max = 2.0 * max_abs / levels;

    double best_err = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    int best_g = 0;
    for (int g = 1; g <= grid_steps; ++g) {
        const double inv_delta = double(grid_steps) / (delta_max * double(g));
        double sum_wv = 0.0;
        double sum_vv = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double x = double(w[i]);
            double q = std::floor(x * inv_delta + cb + 0.5);
            q = std::min(levels, std::max(0.0, q));
            const double v = q - cb;
            sum_wv += x * v;
            sum_vv += v * v;
        }
        double t = sum_vv > 0.0 ? sum_wv / sum_vv : 0.0;
        if (t < 0.0) t = 0.0;
        const double err = sum_ww - 2.0 * t * sum_wv + t * t * sum_vv;
        if (err < best_err) {
            best_err = err;
            best_t = t;
            best_g = g;
        }
    }

    out.codes.resize(d);
    const double inv_delta = double(grid_steps) / (delta_max * double(best_g));
    for (std::size_t i = 0; i < d; ++i) {
        double q = std::floor(double(w[i]) * inv_delta + cb + 0.5);
        q = std::min(levels, std::max(0.0, q));
        out.codes[i] = std::uint16_t(q);
    }
    out.rescale = T(best_t);
    return out;
}

/// t * (u - c_b).
template <typename T>
std::vector<T> reconstruct_column(const ColumnCode<T>& code) {
    const double cb = grid_midpoint(code.bits);
    std::vector<T> out(code.codes.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = T(double(code.rescale) * (double(code.codes[i]) - cb));
    return out;
}

/// Inner product against the reconstruction, evaluated on the integer codes:
/// t * (<u, x> - c_b * sum(x)).
template <typename T>
T estimate_inner(const ColumnCode<T>& code, std::span<const T> x) {
    if (x.size() != code.codes.size())
        throw invalid_dimension_error("estimate_inner: query length " +
                                      std::to_string(x.size()) + " != code length " +
                                      std::to_string(code.codes.size()));
    T sum_ux = T(0);
    T sum_x = T(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum_ux += T(code.codes[i]) * x[i];
        sum_x += x[i];
    }
    return T(code.rescale * (sum_ux - T(grid_midpoint(code.bits)) * sum_x));
}

// ---------------------------------------------------------------------------
// Bit-packed code storage: b-bit fields laid out contiguously LSB-first
// within each byte, column-major across a matrix, final byte zero-padded.
// ---------------------------------------------------------------------------

struct PackedCodes {
    std::vector<std::uint8_t> bytes;
    int bits = 0;
    std::size_t length = 0;  // number of packed fields

    std::size_t expected_bytes() const { return (length * std::size_t(bits) + 7) / 8; }
};

inline PackedCodes pack_codes(std::span<const std::uint16_t> codes, int bits) {
    detail::check_bit_width(bits);
    const std::uint32_t limit = 1u << bits;
    PackedCodes packed;
    packed.bits = bits;
    packed.length = codes.size();
    packed.bytes.assign(packed.expected_bytes(), 0);
    std::size_t bit_pos = 0;
    for (const std::uint16_t code : codes) {
        if (code >= limit)
            throw code_range_error("code value " + std::to_string(code) +
                                   " does not fit in " + std::to_string(bits) + " bits");
        const std::size_t byte = bit_pos >> 3;
        const unsigned offset = unsigned(bit_pos & 7);
        const std::uint32_t shifted = std::uint32_t(code) << offset;
        packed.bytes[byte] |= std::uint8_t(shifted & 0xFFu);
        if (offset + unsigned(bits) > 8) packed.bytes[byte + 1] |= std::uint8_t((shifted >> 8) & 0xFFu);
        if (offset + unsigned(bits) > 16) packed.bytes[byte + 2] |= std::uint8_t((shifted >> 16) & 0xFFu);
        bit_pos += std::size_t(bits);
    }
    return packed;
}

inline std::vector<std::uint16_t> unpack_codes(const PackedCodes& packed) {
    detail::check_bit_width(packed.bits);
    if (packed.bytes.size() != packed.expected_bytes())
        throw corrupt_data_error("packed code stream has " +
                                 std::to_string(packed.bytes.size()) + " bytes, expected " +
                                 std::to_string(packed.expected_bytes()));
    const std::size_t total_bits = packed.length * std::size_t(packed.bits);
    if (!packed.bytes.empty()) {
        const unsigned used = unsigned(total_bits - (packed.bytes.size() - 1) * 8);
        if (used < 8 && (packed.bytes.back() >> used))
            throw corrupt_data_error("packed code stream has nonzero padding bits");
    }
    std::vector<std::uint16_t> codes(packed.length);
    const std::uint32_t mask = (1u << packed.bits) - 1u;
    std::size_t bit_pos = 0;
    for (std::size_t i = 0; i < packed.length; ++i) {
        const std::size_t byte = bit_pos >> 3;
        const unsigned offset = unsigned(bit_pos & 7);
        std::uint32_t window = packed.bytes[byte];
        if (byte + 1 < packed.bytes.size()) window |= std::uint32_t(packed.bytes[byte + 1]) << 8;
        if (byte + 2 < packed.bytes.size()) window |= std::uint32_t(packed.bytes[byte + 2]) << 16;
        codes[i] = std::uint16_t((window >> offset) & mask);
        bit_pos += std::size_t(packed.bits);
    }
    return codes;
}

}  // namespace raana
