#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "raana/core.hpp"
#include "raana/hadamard.hpp"
#include "raana/quantizer.hpp"
#include "raana/transforms.hpp"

namespace raana {

struct TrickFlags {
    bool centralization = true;
    bool row_outliers = false;
    bool col_outliers = true;
    double outlier_ratio = kDefaultOutlierRatio;

    static TrickFlags none() { return {false, false, false, kDefaultOutlierRatio}; }
    static TrickFlags all() { return {true, true, true, kDefaultOutlierRatio}; }
};

// One quantized weight matrix: a shared random rotation, bit-packed grid
// codes with one rescale per surviving column, and the trick records needed
// to correct products exactly.
template <typename T>
struct QuantizedLayer {
    std::size_t input_dim = 0;   // rows of the original weight
    std::size_t output_dim = 0;  // columns of the original weight
    int bits = 0;
    RotationRecord rotation;
    PackedCodes codes;      // column-major over the quantized columns
    std::vector<T> rescales;
    std::vector<TrickRecord<T>> tricks;

    std::size_t quantized_cols() const { return rescales.size(); }

    void validate() const {
        detail::check_bit_width(bits);
        rotation.validate();
        if (rotation.dim != input_dim)
            throw invalid_record_error("layer rotation dimension mismatch");
        if (codes.length != input_dim * quantized_cols() || codes.bits != bits)
            throw invalid_record_error("layer code stream shape mismatch");
    }
};

template <typename T>
QuantizedLayer<T> quantize_layer(const Matrix<T>& w, int bits,
                                 const TrickFlags& flags, Rng& rng,
                                 unsigned threads = 1,
                                 int grid_steps = kDefaultGridSteps) {
    detail::check_bit_width(bits);
    if (w.rows() == 0 || w.cols() == 0)
        throw invalid_dimension_error("quantize_layer: empty weight matrix");
    if (!all_finite(w)) throw invalid_input_error("quantize_layer: non-finite weight");

    QuantizedLayer<T> layer;
    layer.input_dim = w.rows();
    layer.output_dim = w.cols();
    layer.bits = bits;

    Matrix<T> current = w;
    if (flags.centralization) {
        auto [next, rec] = apply_centralization(current);
        current = std::move(next);
        layer.tricks.push_back(std::move(rec));
    }
    if (flags.row_outliers) {
        auto [next, rec] = split_row_outliers(current, flags.outlier_ratio);
        current = std::move(next);
        layer.tricks.push_back(std::move(rec));
    }
    if (flags.col_outliers) {
        auto [next, rec] = split_col_outliers(current, flags.outlier_ratio);
        current = std::move(next);
        layer.tricks.push_back(std::move(rec));
    }

    layer.rotation = RotationRecord::random(w.rows(), rng);

    const std::size_t d = current.rows();
    const std::size_t cq = current.cols();
    std::vector<std::uint16_t> all_codes(d * cq);
    layer.rescales.assign(cq, T(0));
    parallel_for(cq, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<T> column(d);
        for (std::size_t j = begin; j < end; ++j) {
            for (std::size_t i = 0; i < d; ++i) column[i] = current(i, j);
            practical_rht_inplace(std::span<T>(column), layer.rotation);
            ColumnCode<T> code =
                quantize_column(std::span<const T>(column), bits, grid_steps);
            layer.rescales[j] = code.rescale;
            std::copy(code.codes.begin(), code.codes.end(), all_codes.begin() + j * d);
        }
    });
    layer.codes = pack_codes(all_codes, bits);
    return layer;
}

/// Estimate X * W from the quantized layer: rotate the rows of X with the
/// stored rotation, take integer-code inner products against each column,
/// and undo the trick edits.
template <typename T>
Matrix<T> estimate_mm(const Matrix<T>& x, const QuantizedLayer<T>& layer,
                      unsigned threads = 1) {
    layer.validate();
    if (x.cols() != layer.input_dim)
        throw invalid_dimension_error("estimate_mm: input width " +
                                      std::to_string(x.cols()) + " != layer input dim " +
                                      std::to_string(layer.input_dim));

    const std::size_t n = x.rows();
    const std::size_t d = layer.input_dim;
    const std::size_t cq = layer.quantized_cols();
    const T cb = T(grid_midpoint(layer.bits));

    const std::vector<std::uint16_t> raw = unpack_codes(layer.codes);
    std::vector<T> codes(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) codes[i] = T(raw[i]);

    Matrix<T> rotated = x;
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            practical_rht_inplace(rotated.row(i), layer.rotation);
    });

    Matrix<T> estimate(n, cq);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::span<const T> xi = rotated.row(i);
            T row_sum = T(0);
            for (std::size_t k = 0; k < d; ++k) row_sum += xi[k];
            const T z = cb * row_sum;
            for (std::size_t j = 0; j < cq; ++j) {
                const T* u = codes.data() + j * d;
                T dot = T(0);
                for (std::size_t k = 0; k < d; ++k) dot += xi[k] * u[k];
                estimate(i, j) = layer.rescales[j] * (dot - z);
            }
        }
    });

    return invert_tricks(std::move(estimate), x,
                         std::span<const TrickRecord<T>>(layer.tricks));
}

/// The effective full-precision weight the estimator implicitly multiplies
/// by: reconstruct each column, rotate it back, and undo the trick edits.
template <typename T>
Matrix<T> dequantize_layer(const QuantizedLayer<T>& layer) {
    layer.validate();
    const std::size_t d = layer.input_dim;
    const std::size_t cq = layer.quantized_cols();
    const double cb = grid_midpoint(layer.bits);

    const std::vector<std::uint16_t> raw = unpack_codes(layer.codes);
    Matrix<T> w_hat(d, cq);
    std::vector<T> column(d);
    for (std::size_t j = 0; j < cq; ++j) {
        for (std::size_t i = 0; i < d; ++i)
            column[i] = T(double(layer.rescales[j]) * (double(raw[j * d + i]) - cb));
        practical_rht_inverse_inplace(std::span<T>(column), layer.rotation);
        w_hat.set_col(j, column);
    }
    return undo_tricks_on_weights(std::move(w_hat),
                                  std::span<const TrickRecord<T>>(layer.tricks));
}

}  // namespace raana
