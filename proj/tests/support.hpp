#pragma once

// Shared helpers for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "raana/core.hpp"
#include "raana/hadamard.hpp"
#include "raana/quantizer.hpp"

namespace testutil {

inline std::vector<double> random_vector(raana::Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.normal();
    return v;
}

inline std::vector<double> random_unit_vector(raana::Rng& rng, std::size_t d) {
    std::vector<double> v = random_vector(rng, d);
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    while (norm == 0.0) {
        v = random_vector(rng, d);
        norm = 0.0;
        for (const double x : v) norm += x * x;
        norm = std::sqrt(norm);
    }
    for (auto& x : v) x /= norm;
    return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

/// One randomized-rotation estimation trial on unit vectors: rotate w and x
/// with a fresh random rotation, quantize the rotated w at `bits`, and
/// return (estimate - true inner product).
inline double inner_product_trial_error(std::size_t d, int bits, raana::Rng& rng) {
    const std::vector<double> w = random_unit_vector(rng, d);
    const std::vector<double> x = random_unit_vector(rng, d);
    const double truth = dot(w, x);

    const raana::RotationRecord rotation = raana::RotationRecord::random(d, rng);
    const std::vector<double> w_rot = raana::practical_rht(w, rotation);
    const std::vector<double> x_rot = raana::practical_rht(x, rotation);
    const raana::ColumnCode<double> code =
        raana::quantize_column(std::span<const double>(w_rot), bits);
    const double estimate =
        raana::estimate_inner(code, std::span<const double>(x_rot));
    return estimate - truth;
}

/// Two-sample Kolmogorov-Smirnov test; true when the null (same
/// distribution) is NOT rejected at the given significance.
inline bool ks_same_distribution(std::vector<double> a, std::vector<double> b,
                                 double significance_coeff = 1.628 /* alpha = 0.01 */) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size());
    const double nb = double(b.size());
    std::size_t ia = 0;
    std::size_t ib = 0;
    double d_stat = 0.0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] <= b[ib])
            ++ia;
        else
            ++ib;
        d_stat = std::max(d_stat, std::fabs(double(ia) / na - double(ib) / nb));
    }
    const double threshold = significance_coeff * std::sqrt((na + nb) / (na * nb));
    return d_stat <= threshold;
}

}  // namespace testutil
