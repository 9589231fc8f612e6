#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "raana/core.hpp"
#include "raana/rabitq_h.hpp"

namespace raana {

// Binary container for quantized models. All integers little-endian;
// rescales, trick slices and mean rows stored as IEEE half floats; sign
// bitfields packed MSB-first. The exact layout is written out in
// docs/format.md. Reads validate the magic, version and every length field
// before returning, and reject trailing bytes.

inline constexpr char kModelMagic[4] = {'R', 'A', 'A', 'N'};
inline constexpr std::uint16_t kModelVersion = 1;

struct ModelMetadata {
    std::uint64_t seed = 0;
    std::uint8_t calibration_mode = 0;  // CalibrationMode values
    std::uint32_t calibration_samples = 0;
    double avg_bits_target = 0.0;
    double allocation_objective = 0.0;
    std::uint64_t budget_total = 0;
    std::uint64_t budget_consumed = 0;
    std::uint64_t gcd = 1;
};

struct QuantizedModel {
    ModelMetadata meta;
    std::vector<std::pair<std::string, QuantizedLayer<float>>> layers;
};

namespace detail {

class ByteWriter {
public:
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) { append(&v, 2); }
    void u32(std::uint32_t v) { append(&v, 4); }
    void u64(std::uint64_t v) { append(&v, 8); }
    void f64(double v) { append(&v, 8); }
    void raw(const std::uint8_t* data, std::size_t n) {
        bytes.insert(bytes.end(), data, data + n);
    }
    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            u8(std::uint8_t(v) | 0x80u);
            v >>= 7;
        }
        u8(std::uint8_t(v));
    }

private:
    void append(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size, std::string source)
        : data_(data), size_(size), source_(std::move(source)) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() { return read_scalar<std::uint16_t>(); }
    std::uint32_t u32() { return read_scalar<std::uint32_t>(); }
    std::uint64_t u64() { return read_scalar<std::uint64_t>(); }
    double f64() { return read_scalar<double>(); }
    const std::uint8_t* raw(std::size_t n) { return take(n); }

    std::uint64_t varint() {
        std::uint64_t value = 0;
        for (unsigned shift = 0; shift < 64; shift += 7) {
            const std::uint8_t byte = u8();
            value |= std::uint64_t(byte & 0x7F) << shift;
            if (!(byte & 0x80)) return value;
        }
        fail("varint does not terminate");
        return 0;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw corrupt_file_error("'" + source_ + "': " + what + " at offset " +
                                 std::to_string(pos_));
    }

    void expect_end() const {
        if (pos_ != size_)
            throw corrupt_file_error("'" + source_ + "': " + std::to_string(size_ - pos_) +
                                     " unexpected trailing bytes at offset " +
                                     std::to_string(pos_));
    }

private:
    const std::uint8_t* take(std::size_t n) {
        if (n > remaining())
            throw corrupt_file_error("'" + source_ + "': truncated, needed " +
                                     std::to_string(n) + " bytes at offset " +
                                     std::to_string(pos_) + " but only " +
                                     std::to_string(remaining()) + " remain");
        const std::uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }

    template <typename T>
    T read_scalar() {
        T v;
        std::memcpy(&v, take(sizeof(T)), sizeof(T));
        return v;
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string source_;
};

inline void write_half_span(ByteWriter& w, const float* values, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) w.u16(float_to_half(values[i]));
}

inline void write_trick(ByteWriter& w, const TrickRecord<float>& rec) {
    w.u8(std::uint8_t(rec.kind));
    switch (rec.kind) {
        case TrickKind::centralization:
            w.u32(std::uint32_t(rec.mean_row.size()));
            write_half_span(w, rec.mean_row.data(), rec.mean_row.size());
            break;
        case TrickKind::row_outlier:
        case TrickKind::col_outlier: {
            w.u32(std::uint32_t(rec.mask.size()));
            for (std::size_t i = 0; i < rec.mask.size(); ++i)
                w.varint(i == 0 ? rec.mask[0] : rec.mask[i] - rec.mask[i - 1]);
            w.u32(std::uint32_t(rec.retained.rows()));
            w.u32(std::uint32_t(rec.retained.cols()));
            write_half_span(w, rec.retained.data(), rec.retained.size());
            break;
        }
        default:
            throw invalid_record_error("write_trick: unknown trick kind");
    }
}

inline TrickRecord<float> read_trick(ByteReader& r) {
    TrickRecord<float> rec;
    const std::uint8_t kind = r.u8();
    if (kind < 1 || kind > 3) r.fail("unknown trick kind " + std::to_string(kind));
    rec.kind = TrickKind(kind);
    if (rec.kind == TrickKind::centralization) {
        const std::uint32_t len = r.u32();
        rec.mean_row.resize(len);
        for (std::uint32_t i = 0; i < len; ++i) rec.mean_row[i] = half_to_float(r.u16());
        return rec;
    }
    const std::uint32_t mask_count = r.u32();
    rec.mask.resize(mask_count);
    std::uint64_t value = 0;
    for (std::uint32_t i = 0; i < mask_count; ++i) {
        const std::uint64_t delta = r.varint();
        if (i > 0 && delta == 0) r.fail("outlier mask not strictly increasing");
        value = (i == 0) ? delta : value + delta;
        if (value > 0xFFFFFFFFull) r.fail("outlier mask index overflows");
        rec.mask[i] = std::uint32_t(value);
    }
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rec.kind == TrickKind::row_outlier && rows != mask_count)
        r.fail("row outlier slice row count disagrees with mask");
    if (rec.kind == TrickKind::col_outlier && cols != mask_count)
        r.fail("column outlier slice column count disagrees with mask");
    rec.retained = Matrix<float>(rows, cols);
    for (std::size_t i = 0; i < rec.retained.size(); ++i)
        rec.retained.data()[i] = half_to_float(r.u16());
    return rec;
}

}  // namespace detail

/// Serialized byte size of one trick record; used for storage accounting.
inline std::size_t serialized_trick_bytes(const TrickRecord<float>& rec) {
    detail::ByteWriter w;
    detail::write_trick(w, rec);
    return w.bytes.size();
}

inline std::vector<std::uint8_t> serialize_model(const QuantizedModel& model) {
    detail::ByteWriter w;
    w.raw(reinterpret_cast<const std::uint8_t*>(kModelMagic), 4);
    w.u16(kModelVersion);
    w.u64(model.meta.seed);
    w.u8(model.meta.calibration_mode);
    w.u32(model.meta.calibration_samples);
    w.f64(model.meta.avg_bits_target);
    w.f64(model.meta.allocation_objective);
    w.u64(model.meta.budget_total);
    w.u64(model.meta.budget_consumed);
    w.u64(model.meta.gcd);
    w.u32(std::uint32_t(model.layers.size()));

    for (const auto& [label, layer] : model.layers) {
        layer.validate();
        if (label.size() > 0xFFFF)
            throw invalid_config_error("layer label too long to serialize");
        w.u16(std::uint16_t(label.size()));
        w.raw(reinterpret_cast<const std::uint8_t*>(label.data()), label.size());
        w.u32(std::uint32_t(layer.input_dim));
        w.u32(std::uint32_t(layer.output_dim));
        w.u32(std::uint32_t(layer.quantized_cols()));
        w.u8(std::uint8_t(layer.bits));
        w.u32(std::uint32_t(layer.rotation.pow2_dim));
        w.raw(layer.rotation.signs_front.packed_bits().data(),
              layer.rotation.signs_front.packed_bits().size());
        if (!layer.rotation.power_of_two())
            w.raw(layer.rotation.signs_back->packed_bits().data(),
                  layer.rotation.signs_back->packed_bits().size());
        detail::write_half_span(w, layer.rescales.data(), layer.rescales.size());
        w.raw(layer.codes.bytes.data(), layer.codes.bytes.size());
        w.u8(std::uint8_t(layer.tricks.size()));
        for (const auto& trick : layer.tricks) detail::write_trick(w, trick);
    }
    return w.bytes;
}

inline QuantizedModel parse_model(const std::uint8_t* data, std::size_t size,
                                  const std::string& source) {
    detail::ByteReader r(data, size, source);
    if (r.remaining() < 6 || std::memcmp(r.raw(4), kModelMagic, 4) != 0)
        throw unsupported_format_error("'" + source + "': bad magic, not a quantized "
                                       "model file");
    const std::uint16_t version = r.u16();
    if (version != kModelVersion)
        throw unsupported_format_error("'" + source + "': unsupported format version " +
                                       std::to_string(version));

    QuantizedModel model;
    model.meta.seed = r.u64();
    model.meta.calibration_mode = r.u8();
    model.meta.calibration_samples = r.u32();
    model.meta.avg_bits_target = r.f64();
    model.meta.allocation_objective = r.f64();
    model.meta.budget_total = r.u64();
    model.meta.budget_consumed = r.u64();
    model.meta.gcd = r.u64();
    const std::uint32_t layer_count = r.u32();

    for (std::uint32_t li = 0; li < layer_count; ++li) {
        const std::uint16_t label_len = r.u16();
        const std::uint8_t* label_bytes = r.raw(label_len);
        std::string label(reinterpret_cast<const char*>(label_bytes), label_len);

        QuantizedLayer<float> layer;
        layer.input_dim = r.u32();
        layer.output_dim = r.u32();
        const std::uint32_t quantized_cols = r.u32();
        layer.bits = r.u8();
        if (layer.bits < 1 || layer.bits > 15)
            r.fail("layer '" + label + "' has bit width " + std::to_string(layer.bits) +
                   " outside [1, 15]");
        if (layer.input_dim == 0) r.fail("layer '" + label + "' has zero input dim");
        if (quantized_cols > layer.output_dim)
            r.fail("layer '" + label + "' has more quantized columns than outputs");

        layer.rotation.dim = layer.input_dim;
        layer.rotation.pow2_dim = r.u32();
        if (layer.rotation.pow2_dim != floor_pow2(layer.input_dim))
            r.fail("layer '" + label + "' rotation block size " +
                   std::to_string(layer.rotation.pow2_dim) + " is not the leading power "
                   "of two of " + std::to_string(layer.input_dim));
        const std::size_t sign_bytes = (layer.rotation.pow2_dim + 7) / 8;
        try {
            const std::uint8_t* front = r.raw(sign_bytes);
            layer.rotation.signs_front = SignVector::from_packed(
                std::vector<std::uint8_t>(front, front + sign_bytes),
                layer.rotation.pow2_dim);
            if (!layer.rotation.power_of_two()) {
                const std::uint8_t* back = r.raw(sign_bytes);
                layer.rotation.signs_back = SignVector::from_packed(
                    std::vector<std::uint8_t>(back, back + sign_bytes),
                    layer.rotation.pow2_dim);
            }
        } catch (const corrupt_data_error& e) {
            r.fail(std::string("layer '") + label + "': " + e.what());
        }

        layer.rescales.resize(quantized_cols);
        for (std::uint32_t j = 0; j < quantized_cols; ++j)
            layer.rescales[j] = half_to_float(r.u16());

        layer.codes.bits = layer.bits;
        layer.codes.length = std::size_t(layer.input_dim) * quantized_cols;
        const std::size_t code_bytes = layer.codes.expected_bytes();
        const std::uint8_t* codes = r.raw(code_bytes);
        layer.codes.bytes.assign(codes, codes + code_bytes);

        const std::uint8_t trick_count = r.u8();
        for (std::uint8_t t = 0; t < trick_count; ++t)
            layer.tricks.push_back(detail::read_trick(r));

        try {
            layer.validate();
            (void)unpack_codes(layer.codes);
        } catch (const error& e) {
            r.fail(std::string("layer '") + label + "' fails validation: " + e.what());
        }
        model.layers.emplace_back(std::move(label), std::move(layer));
    }
    r.expect_end();
    return model;
}

inline void write_model(const std::string& path, const QuantizedModel& model) {
    const std::vector<std::uint8_t> bytes = serialize_model(model);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw error("cannot open '" + path + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!os) throw error("write failed for '" + path + "'");
}

inline QuantizedModel read_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw error("cannot open '" + path + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return parse_model(bytes.data(), bytes.size(), path);
}

}  // namespace raana
