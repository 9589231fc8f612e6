#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raana/core.hpp"

namespace raana {

// ---------------------------------------------------------------------------
// SignVector: a +/-1 diagonal, stored one bit per entry (MSB-first within
// each byte; a set bit means -1).
// ---------------------------------------------------------------------------

class SignVector {
public:
    SignVector() = default;

    /// All entries +1.
    explicit SignVector(std::size_t n) : size_(n), bits_((n + 7) / 8, 0) {}

    static SignVector random(std::size_t n, Rng& rng) {
        SignVector s(n);
        for (std::size_t i = 0; i < n; ++i)
            if (rng.rademacher() < 0) s.set_negative(i, true);
        return s;
    }

    static SignVector from_packed(std::vector<std::uint8_t> bytes, std::size_t n) {
        if (bytes.size() != (n + 7) / 8)
            throw corrupt_data_error("sign bitfield has " + std::to_string(bytes.size()) +
                                     " bytes, expected " + std::to_string((n + 7) / 8));
        if (n % 8 != 0 && !bytes.empty()) {
            const std::uint8_t pad_mask = std::uint8_t(0xFFu >> (n % 8));
            if (bytes.back() & pad_mask)
                throw corrupt_data_error("sign bitfield has nonzero padding bits");
        }
        SignVector s;
        s.size_ = n;
        s.bits_ = std::move(bytes);
        return s;
    }

    std::size_t size() const { return size_; }

    int sign(std::size_t i) const {
        return (bits_[i >> 3] >> (7 - (i & 7))) & 1 ? -1 : 1;
    }

    void set_negative(std::size_t i, bool negative) {
        const std::uint8_t mask = std::uint8_t(1u << (7 - (i & 7)));
        if (negative)
            bits_[i >> 3] |= mask;
        else
            bits_[i >> 3] &= std::uint8_t(~mask);
    }

    const std::vector<std::uint8_t>& packed_bits() const { return bits_; }

    /// In-place x_i <- sign_i * x_i.
    template <typename T>
    void apply(std::span<T> x) const {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (sign(i) < 0) x[i] = -x[i];
    }

    bool operator==(const SignVector& other) const {
        return size_ == other.size_ && bits_ == other.bits_;
    }

private:
    std::size_t size_ = 0;
    std::vector<std::uint8_t> bits_;
};

// ---------------------------------------------------------------------------
// Normalized fast Walsh-Hadamard transform
// ---------------------------------------------------------------------------

/// In-place orthonormal Walsh-Hadamard transform; requires a power-of-two
/// length. Self-inverse. Iterative butterfly, d*log2(d) add/sub operations.
template <typename T>
void fwht_inplace(std::span<T> x) {
    const std::size_t d = x.size();
    if (!is_power_of_two(d))
        throw invalid_dimension_error("fwht: length " + std::to_string(d) +
                                      " is not a power of two");
    for (std::size_t h = 1; h < d; h <<= 1) {
        for (std::size_t i = 0; i < d; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const T a = x[j];
                const T b = x[j + h];
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
    }
    const double inv_sqrt = 1.0 / std::sqrt(double(d));
    for (auto& v : x) v = T(v * inv_sqrt);
}

template <typename T>
std::vector<T> fwht(std::vector<T> x) {
    fwht_inplace(std::span<T>(x));
    return x;
}

/// Sign flip followed by the normalized transform.
template <typename T>
void rht_forward_inplace(std::span<T> x, const SignVector& signs) {
    if (x.size() != signs.size())
        throw invalid_dimension_error("rht_forward: vector length " +
                                      std::to_string(x.size()) + " != sign length " +
                                      std::to_string(signs.size()));
    signs.apply(x);
    fwht_inplace(x);
}

/// Exact inverse of rht_forward with the same signs: transform, then flip.
template <typename T>
void rht_inverse_inplace(std::span<T> y, const SignVector& signs) {
    if (y.size() != signs.size())
        throw invalid_dimension_error("rht_inverse: vector length " +
                                      std::to_string(y.size()) + " != sign length " +
                                      std::to_string(signs.size()));
    fwht_inplace(y);
    signs.apply(y);
}

template <typename T>
std::vector<T> rht_forward(std::vector<T> x, const SignVector& signs) {
    rht_forward_inplace(std::span<T>(x), signs);
    return x;
}

template <typename T>
std::vector<T> rht_inverse(std::vector<T> y, const SignVector& signs) {
    rht_inverse_inplace(std::span<T>(y), signs);
    return y;
}

// ---------------------------------------------------------------------------
// Arbitrary-dimension rotation: randomized Hadamard on the leading
// power-of-two block, then on the trailing one. The two blocks overlap when
// the dimension is not a power of two, so the middle region is transformed
// twice; the composition stays orthonormal and exactly invertible.
// ---------------------------------------------------------------------------

struct RotationRecord {
    std::size_t dim = 0;
    std::size_t pow2_dim = 0;
    SignVector signs_front;
    std::optional<SignVector> signs_back;

    bool power_of_two() const { return dim == pow2_dim; }

    static RotationRecord random(std::size_t dim, Rng& rng) {
        if (dim == 0) throw invalid_dimension_error("rotation dimension must be positive");
        RotationRecord rec;
        rec.dim = dim;
        rec.pow2_dim = floor_pow2(dim);
        rec.signs_front = SignVector::random(rec.pow2_dim, rng);
        if (!rec.power_of_two()) rec.signs_back = SignVector::random(rec.pow2_dim, rng);
        return rec;
    }

    /// All-plus signs; useful for tests where the sign flip should vanish.
    static RotationRecord identity_signs(std::size_t dim) {
        if (dim == 0) throw invalid_dimension_error("rotation dimension must be positive");
        RotationRecord rec;
        rec.dim = dim;
        rec.pow2_dim = floor_pow2(dim);
        rec.signs_front = SignVector(rec.pow2_dim);
        if (!rec.power_of_two()) rec.signs_back = SignVector(rec.pow2_dim);
        return rec;
    }

    void validate() const {
        if (dim == 0 || pow2_dim != floor_pow2(dim))
            throw invalid_record_error("rotation record: bad dimensions");
        if (signs_front.size() != pow2_dim)
            throw invalid_record_error("rotation record: front sign length mismatch");
        if (power_of_two() != !signs_back.has_value())
            throw invalid_record_error("rotation record: back sign presence mismatch");
        if (signs_back && signs_back->size() != pow2_dim)
            throw invalid_record_error("rotation record: back sign length mismatch");
    }
};

template <typename T>
void practical_rht_inplace(std::span<T> x, const RotationRecord& rec) {
    if (x.size() != rec.dim)
        throw invalid_dimension_error("practical_rht: vector length " +
                                      std::to_string(x.size()) + " != rotation dim " +
                                      std::to_string(rec.dim));
    rht_forward_inplace(x.first(rec.pow2_dim), rec.signs_front);
    if (!rec.power_of_two())
        rht_forward_inplace(x.last(rec.pow2_dim), *rec.signs_back);
}

/// Back block first, then front block.
template <typename T>
void practical_rht_inverse_inplace(std::span<T> y, const RotationRecord& rec) {
    if (y.size() != rec.dim)
        throw invalid_dimension_error("practical_rht_inverse: vector length " +
                                      std::to_string(y.size()) + " != rotation dim " +
                                      std::to_string(rec.dim));
    if (!rec.power_of_two())
        rht_inverse_inplace(y.last(rec.pow2_dim), *rec.signs_back);
    rht_inverse_inplace(y.first(rec.pow2_dim), rec.signs_front);
}

template <typename T>
std::vector<T> practical_rht(std::vector<T> x, const RotationRecord& rec) {
    practical_rht_inplace(std::span<T>(x), rec);
    return x;
}

template <typename T>
std::vector<T> practical_rht_inverse(std::vector<T> y, const RotationRecord& rec) {
    practical_rht_inverse_inplace(std::span<T>(y), rec);
    return y;
}

}  // namespace raana
