#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace raana {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and the I/O paths assume a "
              "little-endian host");

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_dimension_error : error {
    using error::error;
};
struct invalid_input_error : error {
    using error::error;
};
struct invalid_bit_width_error : error {
    using error::error;
};
struct invalid_config_error : error {
    using error::error;
};
struct invalid_record_error : error {
    using error::error;
};
struct code_range_error : error {
    using error::error;
};
struct corrupt_data_error : error {
    using error::error;
};
struct corrupt_file_error : error {
    using error::error;
};
struct unsupported_format_error : error {
    using error::error;
};

struct infeasible_budget_error : error {
    std::uint64_t min_feasible_budget;
    infeasible_budget_error(const std::string& msg, std::uint64_t min_budget)
        : error(msg), min_feasible_budget(min_budget) {}
};

// ---------------------------------------------------------------------------
// Bit helpers
// ---------------------------------------------------------------------------

constexpr bool is_power_of_two(std::size_t n) {
    return n > 0 && (n & (n - 1)) == 0;
}

/// Largest power of two <= n (n >= 1).
constexpr std::size_t floor_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

constexpr int log2_exact(std::size_t n) {
    int k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    return k;
}

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// Counter-based splitmix64. Streams let independent consumers (one per
// layer, per trial, ...) draw non-overlapping sequences from one seed, and
// the output is identical across platforms and thread schedules.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(mix(seed ^ mix(stream * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull))) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    /// +1 or -1, equiprobable.
    int rademacher() { return (next_u64() >> 63) ? -1 : 1; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// ---------------------------------------------------------------------------
// Dense row-major matrix
// ---------------------------------------------------------------------------

template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T value = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    static Matrix from(std::initializer_list<std::initializer_list<T>> init) {
        Matrix m(init.size(), init.size() ? init.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& row : init) {
            if (row.size() != m.cols_)
                throw invalid_input_error("ragged initializer for Matrix");
            std::size_t j = 0;
            for (const T& v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::vector<T> col(std::size_t j) const {
        std::vector<T> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
        return out;
    }

    void set_col(std::size_t j, std::span<const T> values) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
    }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows())
        throw invalid_dimension_error("matmul: inner dimensions disagree (" +
                                      std::to_string(a.cols()) + " vs " +
                                      std::to_string(b.rows()) + ")");
    Matrix<T> out(a.rows(), b.cols(), T{});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T aik = a(i, k);
            if (aik == T{}) continue;
            const std::size_t n = b.cols();
            for (std::size_t j = 0; j < n; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
    Matrix<T> out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

template <typename T>
double frobenius_norm(const Matrix<T>& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += double(a(i, j)) * double(a(i, j));
    return std::sqrt(s);
}

template <typename T>
double frobenius_distance(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw invalid_dimension_error("frobenius_distance: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double d = double(a(i, j)) - double(b(i, j));
            s += d * d;
        }
    return std::sqrt(s);
}

template <typename To, typename From>
Matrix<To> matrix_cast(const Matrix<From>& a) {
    Matrix<To> out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = To(a(i, j));
    return out;
}

template <typename T>
bool all_finite(const Matrix<T>& a) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (!std::isfinite(double(a(i, j)))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// IEEE 754 half-precision conversion (round to nearest even)
// ---------------------------------------------------------------------------

inline std::uint16_t float_to_half(float value) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
    const std::uint32_t sign = (bits >> 16) & 0x8000u;
    const std::uint32_t exponent = (bits >> 23) & 0xFFu;
    const std::uint32_t mantissa = bits & 0x007FFFFFu;

    if (exponent == 0xFFu) {  // inf / nan
        const std::uint32_t payload = mantissa ? (0x0200u | (mantissa >> 13)) : 0u;
        return std::uint16_t(sign | 0x7C00u | payload);
    }

    const int unbiased = int(exponent) - 127;
    if (exponent == 0 || unbiased < -25) return std::uint16_t(sign);  // underflows to zero
    if (unbiased < -14) {
        // subnormal half: m = round(1.mantissa * 2^(unbiased + 24))
        const std::uint32_t full = mantissa | 0x00800000u;
        const int shift = -unbiased - 1;  // in [14, 24]
        const std::uint32_t half_mant = full >> shift;
        const std::uint32_t rest = full & ((1u << shift) - 1);
        const std::uint32_t halfway = 1u << (shift - 1);
        std::uint32_t rounded = half_mant;
        if (rest > halfway || (rest == halfway && (half_mant & 1u))) ++rounded;
        return std::uint16_t(sign | rounded);  // carry rolls into exponent 1 correctly
    }
    if (unbiased > 15) return std::uint16_t(sign | 0x7C00u);  // overflows to inf

    std::uint32_t half_exp = std::uint32_t(unbiased + 15);
    std::uint32_t half_mant = mantissa >> 13;
    const std::uint32_t rest = mantissa & 0x1FFFu;
    if (rest > 0x1000u || (rest == 0x1000u && (half_mant & 1u))) {
        ++half_mant;
        if (half_mant == 0x400u) {
            half_mant = 0;
            ++half_exp;
            if (half_exp == 31u) return std::uint16_t(sign | 0x7C00u);
        }
    }
    return std::uint16_t(sign | (half_exp << 10) | half_mant);
}

inline float half_to_float(std::uint16_t value) {
    const std::uint32_t sign = std::uint32_t(value & 0x8000u) << 16;
    const std::uint32_t exponent = (value >> 10) & 0x1Fu;
    const std::uint32_t mantissa = value & 0x03FFu;

    std::uint32_t bits;
    if (exponent == 0) {
        if (mantissa == 0) {
            bits = sign;
        } else {
            // normalize subnormal
            int e = -1;
            std::uint32_t m = mantissa;
            do {
                ++e;
                m <<= 1;
            } while (!(m & 0x0400u));
            bits = sign | std::uint32_t(127 - 15 - e) << 23 | ((m & 0x03FFu) << 13);
        }
    } else if (exponent == 31) {
        bits = sign | 0x7F800000u | (mantissa << 13);
    } else {
        bits = sign | ((exponent - 15 + 127) << 23) | (mantissa << 13);
    }
    return std::bit_cast<float>(bits);
}

// ---------------------------------------------------------------------------
// Minimal chunked parallel-for over [0, n)
// ---------------------------------------------------------------------------

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const unsigned workers = unsigned(std::min<std::size_t>(threads, n));
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        const std::size_t begin = std::size_t(t) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& th : pool) th.join();
}

inline unsigned hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n ? n : 1;
}

}  // namespace raana
