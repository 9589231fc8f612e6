#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raana/allocator.hpp"
#include "raana/core.hpp"
#include "raana/tensor_archive.hpp"

namespace raana {

// Synthetic calibration sentence used by LLM adapters in zero-shot mode,
// repeated kZeroShotSentenceRepeats times to form the single calibration
// input. The bundled reference net substitutes a seeded Gaussian matrix of
// kDefaultZeroShotRows rows.
inline constexpr std::string_view kZeroShotSentence =
    "The curious fox leaped over the quiet stream, its reflection rippling in "
    "the golden afternoon light.";
inline constexpr int kZeroShotSentenceRepeats = 100;
inline constexpr std::size_t kDefaultZeroShotRows = 100;
inline constexpr std::size_t kDefaultFewShotSamples = 5;

// ---------------------------------------------------------------------------
// Reference network: a chain of linear layers with tanh between them and a
// scalar head that sums the final layer's outputs. Small and self-contained
// so the whole pipeline runs and is testable without an external framework.
// ---------------------------------------------------------------------------

template <typename T>
struct ReferenceNet {
    std::vector<Matrix<T>> weights;  // weights[k] maps width d_k -> d_{k+1}

    std::size_t depth() const { return weights.size(); }
    std::size_t input_dim() const { return weights.empty() ? 0 : weights.front().rows(); }

    void validate() const {
        if (weights.empty()) throw invalid_config_error("reference net has no layers");
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (weights[k].rows() == 0 || weights[k].cols() == 0)
                throw invalid_config_error("reference net layer " + std::to_string(k) +
                                           " is empty");
            if (!all_finite(weights[k]))
                throw invalid_input_error("reference net layer " + std::to_string(k) +
                                          " has non-finite weights");
            if (k + 1 < weights.size() && weights[k].cols() != weights[k + 1].rows())
                throw invalid_config_error("reference net dimension chain broken at layer " +
                                           std::to_string(k));
        }
    }

    /// Layer widths d_0, d_1, ..., d_L; weight k is d_k x d_{k+1} with
    /// N(0, scale_k^2 / d_k) entries.
    static ReferenceNet random(std::span<const std::size_t> dims, Rng& rng,
                               std::span<const double> layer_scales = {}) {
        if (dims.size() < 2)
            throw invalid_config_error("reference net needs at least one layer");
        ReferenceNet net;
        for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
            const double scale =
                (k < layer_scales.size() ? layer_scales[k] : 1.0) / std::sqrt(double(dims[k]));
            Matrix<T> w(dims[k], dims[k + 1]);
            for (std::size_t i = 0; i < w.rows(); ++i)
                for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = T(rng.normal() * scale);
            net.weights.push_back(std::move(w));
        }
        return net;
    }
};

template <typename T>
struct ForwardCache {
    std::vector<Matrix<T>> layer_inputs;   // X^(k), one per layer
    std::vector<Matrix<T>> layer_outputs;  // H^(k) = X^(k) * W^(k)
    T output = T(0);                       // sum of the final layer's entries
};

template <typename T>
ForwardCache<T> forward(const ReferenceNet<T>& net, const Matrix<T>& x) {
    net.validate();
    if (x.cols() != net.input_dim())
        throw invalid_input_error("forward: input width " + std::to_string(x.cols()) +
                                  " != net input dim " + std::to_string(net.input_dim()));
    if (!all_finite(x)) throw invalid_input_error("forward: non-finite input");

    ForwardCache<T> cache;
    cache.layer_inputs.push_back(x);
    for (std::size_t k = 0; k < net.depth(); ++k) {
        Matrix<T> h = matmul(cache.layer_inputs.back(), net.weights[k]);
        if (k + 1 < net.depth()) {
            Matrix<T> activated(h.rows(), h.cols());
            for (std::size_t i = 0; i < h.rows(); ++i)
                for (std::size_t j = 0; j < h.cols(); ++j)
                    activated(i, j) = T(std::tanh(double(h(i, j))));
            cache.layer_inputs.push_back(std::move(activated));
        }
        cache.layer_outputs.push_back(std::move(h));
    }
    const Matrix<T>& last = cache.layer_outputs.back();
    T sum = T(0);
    for (std::size_t i = 0; i < last.rows(); ++i)
        for (std::size_t j = 0; j < last.cols(); ++j) sum += last(i, j);
    cache.output = sum;
    return cache;
}

/// Reverse-mode gradients of the scalar output with respect to each layer's
/// pre-activation output H^(k).
template <typename T>
std::vector<Matrix<T>> backward_layer_grads(const ReferenceNet<T>& net,
                                            const ForwardCache<T>& cache) {
    const std::size_t depth = net.depth();
    std::vector<Matrix<T>> grads(depth);
    const Matrix<T>& last = cache.layer_outputs.back();
    grads[depth - 1] = Matrix<T>(last.rows(), last.cols(), T(1));
    for (std::size_t k = depth - 1; k-- > 0;) {
        // d f / d X^(k+1), then through tanh: multiply by 1 - tanh(H)^2
        Matrix<T> gx = matmul(grads[k + 1], transpose(net.weights[k + 1]));
        const Matrix<T>& activated = cache.layer_inputs[k + 1];
        for (std::size_t i = 0; i < gx.rows(); ++i)
            for (std::size_t j = 0; j < gx.cols(); ++j)
                gx(i, j) *= (T(1) - activated(i, j) * activated(i, j));
        grads[k] = std::move(gx);
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Sensitivity coefficients
// ---------------------------------------------------------------------------

enum class CalibrationMode : std::uint8_t { none = 0, few_shot = 1, zero_shot = 2 };

struct CalibrationReport {
    struct Layer {
        std::string label;
        std::size_t input_dim = 0;
        std::uint64_t param_count = 0;
        double weight_norm = 0.0;
        std::vector<double> grad_norms;   // one per sample
        std::vector<double> input_norms;  // one per sample
        double alpha = 0.0;
    };
    std::vector<Layer> layers;
    std::size_t sample_count = 0;
    CalibrationMode mode = CalibrationMode::none;

    /// Average over samples of grad * input * weight norms / sqrt(d_k),
    /// recomputed from the stored components in storage order.
    double recompute_alpha(std::size_t k) const {
        const Layer& l = layers[k];
        double sum = 0.0;
        for (std::size_t i = 0; i < l.grad_norms.size(); ++i)
            sum += l.grad_norms[i] * l.input_norms[i] * l.weight_norm /
                   std::sqrt(double(l.input_dim));
        return sum / double(l.grad_norms.size());
    }

    SensitivityProfile to_profile() const {
        SensitivityProfile profile;
        for (const Layer& l : layers)
            profile.layers.push_back({l.label, l.param_count, l.alpha});
        return profile;
    }
};

template <typename T>
CalibrationReport compute_sensitivity(const ReferenceNet<T>& net,
                                      std::span<const Matrix<T>> samples,
                                      CalibrationMode mode = CalibrationMode::few_shot) {
    net.validate();
    if (samples.empty())
        throw invalid_config_error("compute_sensitivity: at least one sample required");

    CalibrationReport report;
    report.sample_count = samples.size();
    report.mode = mode;
    report.layers.resize(net.depth());
    for (std::size_t k = 0; k < net.depth(); ++k) {
        auto& layer = report.layers[k];
        layer.label = "W" + std::to_string(k);
        layer.input_dim = net.weights[k].rows();
        layer.param_count = std::uint64_t(net.weights[k].rows()) * net.weights[k].cols();
        layer.weight_norm = frobenius_norm(net.weights[k]);
    }

    for (const Matrix<T>& x : samples) {
        const ForwardCache<T> cache = forward(net, x);
        const std::vector<Matrix<T>> grads = backward_layer_grads(net, cache);
        for (std::size_t k = 0; k < net.depth(); ++k) {
            report.layers[k].grad_norms.push_back(frobenius_norm(grads[k]));
            report.layers[k].input_norms.push_back(frobenius_norm(cache.layer_inputs[k]));
        }
    }
    for (std::size_t k = 0; k < net.depth(); ++k)
        report.layers[k].alpha = report.recompute_alpha(k);
    return report;
}

/// Deterministic synthetic calibration input for zero-shot mode: a seeded
/// standard-normal matrix of shape (rows, input_dim).
template <typename T>
Matrix<T> zero_shot_input(const ReferenceNet<T>& net, std::uint64_t seed,
                          std::size_t rows = kDefaultZeroShotRows) {
    net.validate();
    Rng rng(seed, /*stream=*/0x5A5A5A5Aull);
    Matrix<T> x(rows, net.input_dim());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = T(rng.normal());
    return x;
}

// Archive conventions: weight tensors are named W0..W{L-1}, calibration or
// evaluation inputs X0..X{n-1}.

inline ReferenceNet<float> load_reference_net(const TensorArchive& archive) {
    ReferenceNet<float> net;
    for (std::size_t k = 0;; ++k) {
        const Matrix<float>* w = archive.find("W" + std::to_string(k));
        if (!w) break;
        net.weights.push_back(*w);
    }
    if (net.weights.empty())
        throw invalid_config_error("archive holds no weight tensors named W0, W1, ...");
    net.validate();
    return net;
}

inline std::vector<Matrix<float>> load_samples(const TensorArchive& archive) {
    std::vector<Matrix<float>> samples;
    for (std::size_t s = 0;; ++s) {
        const Matrix<float>* x = archive.find("X" + std::to_string(s));
        if (!x) break;
        samples.push_back(*x);
    }
    if (samples.empty())
        throw invalid_config_error("archive holds no sample tensors named X0, X1, ...");
    return samples;
}

}  // namespace raana
