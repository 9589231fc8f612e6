#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "raana/core.hpp"

namespace raana {

// Invertible pre-quantization edits to a weight matrix. Each one records
// enough to recover the exact product X*W from the product against the
// edited matrix, so the quantizer only ever sees the easier residual.

enum class TrickKind : std::uint8_t {
    centralization = 1,  // subtract the mean row; correction adds (X*1) mu^T
    row_outlier = 2,     // zero high-norm rows; correction adds X[:,mask]*retained
    col_outlier = 3,     // remove high-norm columns; exact product re-inserted
};

inline constexpr double kDefaultOutlierRatio = 0.003;

template <typename T>
struct TrickRecord {
    TrickKind kind;
    std::vector<T> mean_row;          // centralization: one entry per output column
    std::vector<std::uint32_t> mask;  // outlier kinds: sorted selected indices
    Matrix<T> retained;               // row kind: |mask| x c; col kind: d x |mask|
};

namespace detail {

/// ceil(ratio * n) with a tolerance for the binary representation of the
/// ratio, clamped to [1, n] whenever ratio * n > 0.
inline std::size_t outlier_count(double ratio, std::size_t n) {
    if (ratio <= 0.0 || n == 0) return 0;
    const double product = ratio * double(n);
    auto k = std::size_t(std::ceil(product - 1e-9));
    if (k == 0) k = 1;
    return std::min(k, n);
}

/// Indices of the k largest values; ties broken toward the lower index.
/// Returned sorted ascending.
inline std::vector<std::uint32_t> top_k_indices(std::span<const double> values,
                                                std::size_t k) {
    std::vector<std::uint32_t> order(values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return values[a] > values[b];
    });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace detail

template <typename T>
std::pair<Matrix<T>, TrickRecord<T>> apply_centralization(const Matrix<T>& w) {
    const std::size_t d = w.rows();
    const std::size_t c = w.cols();
    TrickRecord<T> rec;
    rec.kind = TrickKind::centralization;
    rec.mean_row.resize(c);
    for (std::size_t j = 0; j < c; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < d; ++i) sum += double(w(i, j));
        rec.mean_row[j] = T(sum / double(d));
    }
    Matrix<T> centered(d, c);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < c; ++j) centered(i, j) = w(i, j) - rec.mean_row[j];
    return {std::move(centered), std::move(rec)};
}

/// Rows with the largest values of `row_stat` are zeroed and retained. The
/// statistic defaults to the squared Euclidean norm but is injectable, e.g.
/// for activation-based selection.
template <typename T, typename RowStat>
std::pair<Matrix<T>, TrickRecord<T>> split_row_outliers(const Matrix<T>& w, double ratio,
                                                        RowStat&& row_stat) {
    if (ratio <= 0.0 || ratio >= 1.0)
        throw invalid_config_error("row outlier ratio must lie in (0, 1)");
    const std::size_t d = w.rows();
    const std::size_t c = w.cols();
    std::vector<double> norms(d);
    for (std::size_t i = 0; i < d; ++i) norms[i] = double(row_stat(w.row(i)));
    TrickRecord<T> rec;
    rec.kind = TrickKind::row_outlier;
    rec.mask = detail::top_k_indices(norms, detail::outlier_count(ratio, d));
    rec.retained = Matrix<T>(rec.mask.size(), c);
    Matrix<T> main = w;
    for (std::size_t m = 0; m < rec.mask.size(); ++m) {
        const std::size_t i = rec.mask[m];
        for (std::size_t j = 0; j < c; ++j) {
            rec.retained(m, j) = w(i, j);
            main(i, j) = T(0);
        }
    }
    return {std::move(main), std::move(rec)};
}

template <typename T>
std::pair<Matrix<T>, TrickRecord<T>> split_row_outliers(const Matrix<T>& w,
                                                        double ratio = kDefaultOutlierRatio) {
    return split_row_outliers(w, ratio, [](std::span<const T> row) {
        double s = 0.0;
        for (const T v : row) s += double(v) * double(v);
        return s;
    });
}

template <typename T>
std::pair<Matrix<T>, TrickRecord<T>> split_col_outliers(const Matrix<T>& w,
                                                        double ratio = kDefaultOutlierRatio) {
    if (ratio <= 0.0 || ratio >= 1.0)
        throw invalid_config_error("column outlier ratio must lie in (0, 1)");
    const std::size_t d = w.rows();
    const std::size_t c = w.cols();
    std::vector<double> norms(c);
    for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += double(w(i, j)) * double(w(i, j));
        norms[j] = s;
    }
    TrickRecord<T> rec;
    rec.kind = TrickKind::col_outlier;
    rec.mask = detail::top_k_indices(norms, detail::outlier_count(ratio, c));
    rec.retained = Matrix<T>(d, rec.mask.size());
    Matrix<T> main(d, c - rec.mask.size());
    std::size_t m = 0;
    std::size_t out_j = 0;
    for (std::size_t j = 0; j < c; ++j) {
        if (m < rec.mask.size() && rec.mask[m] == j) {
            for (std::size_t i = 0; i < d; ++i) rec.retained(i, m) = w(i, j);
            ++m;
        } else {
            for (std::size_t i = 0; i < d; ++i) main(i, out_j) = w(i, j);
            ++out_j;
        }
    }
    return {std::move(main), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Inference-side correction: records are undone in reverse order of
// application, turning an estimate of X * W_edited into an estimate of X * W.
// ---------------------------------------------------------------------------

template <typename T>
Matrix<T> invert_tricks(Matrix<T> y, const Matrix<T>& x,
                        std::span<const TrickRecord<T>> records) {
    if (y.rows() != x.rows())
        throw invalid_record_error("invert_tricks: estimate and input row counts disagree");
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        const TrickRecord<T>& rec = *it;
        switch (rec.kind) {
            case TrickKind::centralization: {
                if (rec.mean_row.size() != y.cols())
                    throw invalid_record_error("centralization record width mismatch");
                for (std::size_t i = 0; i < y.rows(); ++i) {
                    T row_sum = T(0);
                    for (std::size_t k = 0; k < x.cols(); ++k) row_sum += x(i, k);
                    for (std::size_t j = 0; j < y.cols(); ++j)
                        y(i, j) += row_sum * rec.mean_row[j];
                }
                break;
            }
            case TrickKind::row_outlier: {
                if (rec.retained.rows() != rec.mask.size() || rec.retained.cols() != y.cols())
                    throw invalid_record_error("row outlier record shape mismatch");
                for (const std::uint32_t r : rec.mask)
                    if (r >= x.cols())
                        throw invalid_record_error("row outlier mask index out of range");
                for (std::size_t i = 0; i < y.rows(); ++i)
                    for (std::size_t m = 0; m < rec.mask.size(); ++m) {
                        const T xv = x(i, rec.mask[m]);
                        for (std::size_t j = 0; j < y.cols(); ++j)
                            y(i, j) += xv * rec.retained(m, j);
                    }
                break;
            }
            case TrickKind::col_outlier: {
                if (rec.retained.rows() != x.cols() || rec.retained.cols() != rec.mask.size())
                    throw invalid_record_error("column outlier record shape mismatch");
                const std::size_t full_cols = y.cols() + rec.mask.size();
                for (const std::uint32_t cidx : rec.mask)
                    if (cidx >= full_cols)
                        throw invalid_record_error("column outlier mask index out of range");
                const Matrix<T> exact = matmul(x, rec.retained);
                Matrix<T> merged(y.rows(), full_cols);
                std::size_t m = 0;
                std::size_t src_j = 0;
                for (std::size_t j = 0; j < full_cols; ++j) {
                    if (m < rec.mask.size() && rec.mask[m] == j) {
                        for (std::size_t i = 0; i < y.rows(); ++i) merged(i, j) = exact(i, m);
                        ++m;
                    } else {
                        for (std::size_t i = 0; i < y.rows(); ++i) merged(i, j) = y(i, src_j);
                        ++src_j;
                    }
                }
                y = std::move(merged);
                break;
            }
            default:
                throw invalid_record_error("unknown trick kind");
        }
    }
    return y;
}

/// Structural counterpart of invert_tricks acting on a reconstructed weight
/// matrix: produces the effective full-size weight whose exact product the
/// corrected estimator computes.
template <typename T>
Matrix<T> undo_tricks_on_weights(Matrix<T> w, std::span<const TrickRecord<T>> records) {
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        const TrickRecord<T>& rec = *it;
        switch (rec.kind) {
            case TrickKind::centralization: {
                if (rec.mean_row.size() != w.cols())
                    throw invalid_record_error("centralization record width mismatch");
                for (std::size_t i = 0; i < w.rows(); ++i)
                    for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) += rec.mean_row[j];
                break;
            }
            case TrickKind::row_outlier: {
                if (rec.retained.rows() != rec.mask.size() || rec.retained.cols() != w.cols())
                    throw invalid_record_error("row outlier record shape mismatch");
                for (std::size_t m = 0; m < rec.mask.size(); ++m) {
                    if (rec.mask[m] >= w.rows())
                        throw invalid_record_error("row outlier mask index out of range");
                    for (std::size_t j = 0; j < w.cols(); ++j)
                        w(rec.mask[m], j) += rec.retained(m, j);
                }
                break;
            }
            case TrickKind::col_outlier: {
                if (rec.retained.rows() != w.rows() || rec.retained.cols() != rec.mask.size())
                    throw invalid_record_error("column outlier record shape mismatch");
                const std::size_t full_cols = w.cols() + rec.mask.size();
                Matrix<T> merged(w.rows(), full_cols);
                std::size_t m = 0;
                std::size_t src_j = 0;
                for (std::size_t j = 0; j < full_cols; ++j) {
                    if (m < rec.mask.size() && rec.mask[m] == j) {
                        for (std::size_t i = 0; i < w.rows(); ++i)
                            merged(i, j) = rec.retained(i, m);
                        ++m;
                    } else {
                        for (std::size_t i = 0; i < w.rows(); ++i) merged(i, j) = w(i, src_j);
                        ++src_j;
                    }
                }
                w = std::move(merged);
                break;
            }
            default:
                throw invalid_record_error("unknown trick kind");
        }
    }
    return w;
}

}  // namespace raana
