// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "raana/raana.hpp"
#include "support.hpp"

using namespace raana;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s -- %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

template <typename T>
Matrix<T> gaussian(Rng& rng, std::size_t r, std::size_t c) {
    Matrix<T> m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = T(rng.normal());
    return m;
}

struct TrialCell {
    std::size_t dim;
    int bits;
    double rate;
    double rms;
};

// ---------------------------------------------------------------------------
// Criteria 1 and 2: randomized-rotation inner-product trials over the
// (d, b) grid; per-cell tail rate against 5.75 / (sqrt(d) * 2^b), then
// regression slopes of log RMS against b and log d.
// ---------------------------------------------------------------------------

std::vector<TrialCell> run_trial_grid(int trials) {
    const std::size_t dims[] = {64, 256, 1024};
    std::vector<TrialCell> cells;
    for (const std::size_t d : dims) {
        for (int b = 1; b <= 8; ++b) {
            const double bound = 5.75 / (std::sqrt(double(d)) * std::ldexp(1.0, b));
            std::mutex mu;
            long inside = 0;
            double sum_sq = 0.0;
            parallel_for(std::size_t(trials), hardware_threads(),
                         [&](std::size_t lo, std::size_t hi) {
                             long local_inside = 0;
                             double local_sq = 0.0;
                             for (std::size_t t = lo; t < hi; ++t) {
                                 Rng rng(77, (d * 16 + std::size_t(b)) * 1000003ull + t);
                                 const double err =
                                     testutil::inner_product_trial_error(d, b, rng);
                                 local_sq += err * err;
                                 if (std::fabs(err) <= bound) ++local_inside;
                             }
                             std::lock_guard<std::mutex> lock(mu);
                             inside += local_inside;
                             sum_sq += local_sq;
                         });
            cells.push_back({d, b, double(inside) / double(trials),
                             std::sqrt(sum_sq / double(trials))});
        }
    }
    return cells;
}

void criterion_1_and_2() {
    const auto start = std::chrono::steady_clock::now();
    const int trials = 10000;
    const std::vector<TrialCell> cells = run_trial_grid(trials);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    double worst_rate = 1.0;
    std::size_t worst_d = 0;
    int worst_b = 0;
    for (const TrialCell& cell : cells) {
        if (cell.rate < worst_rate) {
            worst_rate = cell.rate;
            worst_d = cell.dim;
            worst_b = cell.bits;
        }
    }
    {
        std::ostringstream detail;
        detail.precision(4);
        detail << "worst cell d=" << worst_d << " b=" << worst_b << " rate=" << worst_rate
               << " (threshold 0.995, " << trials << " trials/cell, " << int(elapsed)
               << "s)";
        report(1, "inner-product error bound", worst_rate >= 0.995 && elapsed <= 300.0,
               detail.str());
    }

    // two-covariate least squares: log rms ~ c0 + c1 * b + c2 * log d
    double m[3][4] = {};
    for (const TrialCell& cell : cells) {
        const double row[3] = {1.0, double(cell.bits), std::log(double(cell.dim))};
        const double y = std::log(cell.rms);
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c) m[a][c] += row[a] * row[c];
            m[a][3] += row[a] * y;
        }
    }
    for (int p = 0; p < 3; ++p)
        for (int r = p + 1; r < 3; ++r) {
            const double f = m[r][p] / m[p][p];
            for (int c = p; c < 4; ++c) m[r][c] -= f * m[p][c];
        }
    double beta[3];
    for (int p = 2; p >= 0; --p) {
        beta[p] = m[p][3];
        for (int c = p + 1; c < 3; ++c) beta[p] -= m[p][c] * beta[c];
        beta[p] /= m[p][p];
    }
    const double target_b = -std::log(2.0);
    const bool slope_b_ok = beta[1] >= target_b * 1.1 && beta[1] <= target_b * 0.9;
    const bool slope_d_ok = beta[2] >= -0.575 && beta[2] <= -0.425;
    std::ostringstream detail;
    detail.precision(4);
    detail << "slope_b=" << beta[1] << " (want " << target_b << " +-10%), slope_logd="
           << beta[2] << " (want -0.5 +-15%)";
    report(2, "error scaling 2^-b / sqrt(d)", slope_b_ok && slope_d_ok, detail.str());
}

void criterion_3_bias() {
    const std::size_t d = 256;
    const int bits = 4;
    const long trials = 1000000;
    std::mutex mu;
    double sum = 0.0;
    parallel_for(std::size_t(trials), hardware_threads(),
                 [&](std::size_t lo, std::size_t hi) {
                     double local = 0.0;
                     for (std::size_t t = lo; t < hi; ++t) {
                         Rng rng(4242, t);
                         local += testutil::inner_product_trial_error(d, bits, rng);
                     }
                     std::lock_guard<std::mutex> lock(mu);
                     sum += local;
                 });
    const double mean = sum / double(trials);
    const double threshold = 5e-3 / (std::sqrt(double(d)) * std::ldexp(1.0, bits));
    std::ostringstream detail;
    detail.precision(3);
    detail << "|mean|=" << std::fabs(mean) << " threshold=" << threshold << " over "
           << trials << " trials";
    report(3, "near-zero bias", std::fabs(mean) <= threshold, detail.str());
}

// ---------------------------------------------------------------------------
// Criteria 4 and 5: the table solver against exhaustive enumeration, and
// the gcd reduction.
// ---------------------------------------------------------------------------

void criterion_4_dp_exactness() {
    bool pass = true;
    std::string failure;

    SensitivityProfile hand;
    hand.layers = {{"a", 1, 4.0}, {"b", 1, 1.0}};
    const std::vector<int> hand_candidates{1, 2, 3};
    const BitAllocation hand_alloc = allocate_dp(hand, hand_candidates, 4);
    if (hand_alloc.bits != std::vector<int>{3, 1} || hand_alloc.objective != 1.0) {
        pass = false;
        failure = "hand instance returned wrong allocation";
    }

    int checked = 0;
    Rng rng(555);
    while (checked < 100 && pass) {
        const std::size_t layers = 1 + rng.next_u64() % 6;
        const std::size_t num_candidates = 1 + rng.next_u64() % 4;
        std::vector<int> candidates;
        int b = 1 + int(rng.next_u64() % 2);
        for (std::size_t i = 0; i < num_candidates; ++i) {
            candidates.push_back(b);
            b += 1 + int(rng.next_u64() % 2);
        }
        const std::uint64_t scale = 1 + rng.next_u64() % 4096;
        SensitivityProfile profile;
        std::uint64_t min_reduced = 0;
        for (std::size_t k = 0; k < layers; ++k) {
            const std::uint64_t m = 1 + rng.next_u64() % 3;
            profile.layers.push_back(
                {"L" + std::to_string(k), m * scale, 0.1 + 10.0 * rng.uniform()});
            min_reduced += m * std::uint64_t(candidates.front());
        }
        const std::uint64_t reduced_budget =
            std::min<std::uint64_t>(64, min_reduced + rng.next_u64() % 40);
        if (reduced_budget < min_reduced) continue;
        const std::uint64_t budget = reduced_budget * scale;

        const BitAllocation dp = allocate_dp(profile, candidates, budget);
        const BitAllocation bf = allocate_bruteforce(profile, candidates, budget);
        if (dp.objective != bf.objective) {
            pass = false;
            failure = "objective mismatch on instance " + std::to_string(checked);
        }
        ++checked;
    }
    report(4, "table solver matches exhaustive enumeration", pass,
           pass ? "hand instance (3,1)@1.0 and 100 random guarded instances, zero tolerance"
                : failure);
}

void criterion_5_gcd() {
    const std::vector<std::uint64_t> m{8, 12};
    const GcdReduction reduction = reduce_by_gcd(m, 40);
    bool pass = reduction.gcd == 4 && reduction.budget == 10 &&
                reduction.params == std::vector<std::uint64_t>{2, 3};

    SensitivityProfile direct;
    direct.layers = {{"a", 8, 3.0}, {"b", 12, 1.5}};
    SensitivityProfile reduced;
    reduced.layers = {{"a", 2, 3.0}, {"b", 3, 1.5}};
    const std::vector<int> candidates{1, 2, 3};
    const BitAllocation da = allocate_dp(direct, candidates, 40);
    const BitAllocation ra = allocate_dp(reduced, candidates, 10);
    pass = pass && da.bits == ra.bits && da.objective == ra.objective;
    report(5, "gcd reduction", pass,
           pass ? "m=(8,12), R=40 -> g=4, R'=10; reduced and unreduced solve identically"
                : "reduction mismatch");
}

// ---------------------------------------------------------------------------
// Criterion 6: transform correctness.
// ---------------------------------------------------------------------------

void criterion_6_transforms() {
    bool pass = true;
    std::string failure;
    Rng rng(661);

    for (int trial = 0; trial < 50 && pass; ++trial) {
        std::vector<float> x(256);
        for (auto& v : x) v = float(rng.normal());
        const std::vector<float> twice = fwht(fwht(x));
        for (std::size_t i = 0; i < x.size(); ++i)
            if (std::fabs(twice[i] - x[i]) > 1e-5f) {
                pass = false;
                failure = "involution residual too large";
            }
    }

    for (const std::size_t d : {6u, 100u, 1000u, 11008u}) {
        if (!pass) break;
        const RotationRecord rec = RotationRecord::random(d, rng);
        for (int trial = 0; trial < 5 && pass; ++trial) {
            const std::vector<double> x = testutil::random_vector(rng, d);
            const std::vector<double> y = testutil::random_vector(rng, d);
            const double before = testutil::dot(x, y);
            const double after =
                testutil::dot(practical_rht(x, rec), practical_rht(y, rec));
            if (std::fabs(after - before) > 1e-5 * std::max(1.0, std::fabs(before))) {
                pass = false;
                failure = "inner product drift at d=" + std::to_string(d);
            }
        }
    }

    for (std::size_t d = 1; d <= 64 && pass; ++d) {
        const RotationRecord rec = RotationRecord::random(d, rng);
        const std::size_t p = rec.pow2_dim;
        Matrix<double> h(1, 1);
        h(0, 0) = 1.0;
        for (std::size_t mdim = 1; mdim < p; mdim <<= 1) {
            Matrix<double> next(2 * mdim, 2 * mdim);
            for (std::size_t i = 0; i < mdim; ++i)
                for (std::size_t j = 0; j < mdim; ++j) {
                    next(i, j) = h(i, j);
                    next(i, j + mdim) = h(i, j);
                    next(i + mdim, j) = h(i, j);
                    next(i + mdim, j + mdim) = -h(i, j);
                }
            h = std::move(next);
        }
        const double scale = 1.0 / std::sqrt(double(p));
        auto embedded = [&](const SignVector& signs, std::size_t start) {
            Matrix<double> out(d, d, 0.0);
            for (std::size_t i = 0; i < d; ++i) out(i, i) = 1.0;
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < p; ++j)
                    out(start + i, start + j) = h(i, j) * scale * double(signs.sign(j));
            return out;
        };
        Matrix<double> dense = embedded(rec.signs_front, 0);
        if (!rec.power_of_two()) dense = matmul(embedded(*rec.signs_back, d - p), dense);
        const std::vector<double> x = testutil::random_vector(rng, d);
        const std::vector<double> fast = practical_rht(x, rec);
        for (std::size_t i = 0; i < d; ++i) {
            double expect = 0.0;
            for (std::size_t j = 0; j < d; ++j) expect += dense(i, j) * x[j];
            if (std::fabs(fast[i] - expect) > 1e-10) {
                pass = false;
                failure = "dense oracle mismatch at d=" + std::to_string(d);
            }
        }
    }
    report(6, "transform correctness", pass,
           pass ? "involution <=1e-5; products preserved at d in {6,100,1000,11008}; "
                  "dense oracle equality to 1e-10 for d<=64"
                : failure);
}

// ---------------------------------------------------------------------------
// Criterion 7: the estimator equals multiplication by the dequantized weight.
// ---------------------------------------------------------------------------

void criterion_7_estimator_identity() {
    bool pass = true;
    double worst = 0.0;
    int layers_checked = 0;
    Rng rng(771);
    for (const bool with_tricks : {false, true}) {
        for (int bits = 1; bits <= 8 && pass; ++bits) {
            for (int repeat = 0; repeat < 4; ++repeat) {
                const Matrix<double> w = gaussian<double>(rng, 16, 32);
                Rng qrng(780 + bits * 10 + repeat, with_tricks);
                const QuantizedLayer<double> layer = quantize_layer(
                    w, bits, with_tricks ? TrickFlags{} : TrickFlags::none(), qrng);
                const Matrix<double> x = gaussian<double>(rng, 4, 16);
                const Matrix<double> via_estimator = estimate_mm(x, layer);
                const Matrix<double> via_weights = matmul(x, dequantize_layer(layer));
                const double rel = frobenius_distance(via_estimator, via_weights) /
                                   std::max(1e-30, frobenius_norm(via_weights));
                worst = std::max(worst, rel);
                ++layers_checked;
                if (rel > 1e-5) pass = false;
            }
        }
    }
    std::ostringstream detail;
    detail.precision(3);
    detail << layers_checked << " layers, worst relative deviation " << worst
           << " (threshold 1e-5)";
    report(7, "estimator identity", pass, detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 8: trick exactness under a lossless product.
// ---------------------------------------------------------------------------

void criterion_8_trick_exactness() {
    bool pass = true;
    double worst = 0.0;
    Rng rng(881);
    const Matrix<double> w = gaussian<double>(rng, 20, 15);
    const Matrix<double> x = gaussian<double>(rng, 6, 20);
    const Matrix<double> exact = matmul(x, w);
    for (int combo = 0; combo < 8; ++combo) {
        Matrix<double> current = w;
        std::vector<TrickRecord<double>> records;
        if (combo & 1) {
            auto [next, rec] = apply_centralization(current);
            current = std::move(next);
            records.push_back(std::move(rec));
        }
        if (combo & 2) {
            auto [next, rec] = split_row_outliers(current, 0.1);
            current = std::move(next);
            records.push_back(std::move(rec));
        }
        if (combo & 4) {
            auto [next, rec] = split_col_outliers(current, 0.2);
            current = std::move(next);
            records.push_back(std::move(rec));
        }
        const Matrix<double> recovered = invert_tricks(
            matmul(x, current), x, std::span<const TrickRecord<double>>(records));
        const double rel = frobenius_distance(recovered, exact) / frobenius_norm(exact);
        worst = std::max(worst, rel);
        if (rel > 1e-10) pass = false;
    }
    std::ostringstream detail;
    detail.precision(3);
    detail << "all 8 combinations, worst relative deviation " << worst
           << " (threshold 1e-10)";
    report(8, "trick exactness", pass, detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 9: reference-net gradients against central finite differences.
// ---------------------------------------------------------------------------

void criterion_9_gradients() {
    bool pass = true;
    std::string failure;

    {
        ReferenceNet<double> net;
        net.weights.push_back(Matrix<double>::from({{1.0}, {1.0}, {1.0}, {1.0}}));
        const std::vector<Matrix<double>> samples{
            Matrix<double>::from({{1.0, 1.0, 1.0, 1.0}})};
        const CalibrationReport rep =
            compute_sensitivity(net, std::span<const Matrix<double>>(samples));
        if (rep.layers[0].alpha != 2.0) {
            pass = false;
            failure = "hand sensitivity != 2";
        }
    }

    const std::vector<std::size_t> dims{64, 48, 32, 24, 16};
    Rng nrng(991);
    const ReferenceNet<double> net = ReferenceNet<double>::random(dims, nrng);
    Rng xrng(992);
    const Matrix<double> x = gaussian<double>(xrng, 2, 64);
    const ForwardCache<double> cache = forward(net, x);
    const std::vector<Matrix<double>> grads = backward_layer_grads(net, cache);

    auto tail_output = [&](std::size_t layer, const Matrix<double>& h) {
        Matrix<double> a = h;
        for (std::size_t l = layer; l + 1 < net.depth(); ++l) {
            Matrix<double> act(a.rows(), a.cols());
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t j = 0; j < a.cols(); ++j) act(i, j) = std::tanh(a(i, j));
            a = matmul(act, net.weights[l + 1]);
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) sum += a(i, j);
        return sum;
    };
    const double step = 1e-4;
    double worst = 0.0;
    for (std::size_t layer = 0; layer < net.depth() && pass; ++layer) {
        const Matrix<double>& h = cache.layer_outputs[layer];
        for (std::size_t i = 0; i < h.rows() && pass; ++i) {
            for (std::size_t j = 0; j < h.cols(); ++j) {
                Matrix<double> plus = h;
                Matrix<double> minus = h;
                plus(i, j) += step;
                minus(i, j) -= step;
                const double fd =
                    (tail_output(layer, plus) - tail_output(layer, minus)) / (2 * step);
                const double rel = std::fabs(fd - grads[layer](i, j)) /
                                   std::max(1.0, std::fabs(grads[layer](i, j)));
                worst = std::max(worst, rel);
                if (rel > 1e-4) {
                    pass = false;
                    failure = "finite-difference residual at layer " + std::to_string(layer);
                    break;
                }
            }
        }
    }
    std::ostringstream detail;
    detail.precision(3);
    detail << "4-layer net widths up to 64, worst relative residual " << worst
           << "; hand instance alpha=2 exact";
    report(9, "gradient correctness", pass, pass ? detail.str() : failure);
}

// ---------------------------------------------------------------------------
// Criteria 10 and 12: pipeline-level comparisons on the reference net.
// ---------------------------------------------------------------------------

double quantized_output_error(const ReferenceNet<double>& net, const std::vector<int>& bits,
                              std::uint64_t qseed,
                              const std::vector<Matrix<double>>& inputs) {
    std::vector<QuantizedLayer<double>> layers;
    for (std::size_t k = 0; k < net.depth(); ++k) {
        Rng rng(qseed, k);
        layers.push_back(quantize_layer(net.weights[k], bits[k], TrickFlags{}, rng));
    }
    double total = 0.0;
    for (const auto& x : inputs) {
        const ForwardCache<double> cache = forward(net, x);
        Matrix<double> current = x;
        double quantized_output = 0.0;
        for (std::size_t k = 0; k < net.depth(); ++k) {
            const Matrix<double> h = estimate_mm(current, layers[k]);
            if (k + 1 < net.depth()) {
                Matrix<double> a(h.rows(), h.cols());
                for (std::size_t i = 0; i < h.rows(); ++i)
                    for (std::size_t j = 0; j < h.cols(); ++j) a(i, j) = std::tanh(h(i, j));
                current = std::move(a);
            } else {
                double sum = 0.0;
                for (std::size_t i = 0; i < h.rows(); ++i)
                    for (std::size_t j = 0; j < h.cols(); ++j) sum += h(i, j);
                quantized_output = sum;
            }
        }
        total += std::fabs(double(cache.output) - quantized_output);
    }
    return total / double(inputs.size());
}

ReferenceNet<double> acceptance_reference_net(int seed) {
    std::vector<std::size_t> dims(7, 16);
    std::vector<double> scales;
    for (int k = 0; k < 6; ++k) scales.push_back(0.9 * std::pow(0.75, k));
    Rng rng(6000 + std::uint64_t(seed));
    return ReferenceNet<double>::random(dims, rng, scales);
}

void criterion_10_allocation_beats_uniform() {
    const std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8};
    bool pass = true;
    std::ostringstream detail;
    for (const int bbar : {2, 3}) {
        int wins = 0;
        for (int seed = 0; seed < 50; ++seed) {
            const ReferenceNet<double> net = acceptance_reference_net(seed);
            Rng srng(6500 + std::uint64_t(seed));
            std::vector<Matrix<double>> samples, inputs;
            for (int s = 0; s < 5; ++s) samples.push_back(gaussian<double>(srng, 16, 16));
            for (int s = 0; s < 64; ++s) inputs.push_back(gaussian<double>(srng, 16, 16));
            const SensitivityProfile profile =
                compute_sensitivity(net, std::span<const Matrix<double>>(samples))
                    .to_profile();
            const BitAllocation alloc = allocate_dp(
                profile, candidates, std::uint64_t(bbar) * profile.total_params());
            const std::vector<int> uniform(net.depth(), bbar);
            const double err_alloc =
                quantized_output_error(net, alloc.bits, 7000 + seed, inputs);
            const double err_uniform =
                quantized_output_error(net, uniform, 7000 + seed, inputs);
            if (err_alloc <= err_uniform) ++wins;
        }
        detail << "avg " << bbar << " bits: " << wins << "/50 ";
        if (wins < 40) pass = false;
    }
    detail << "(threshold 40/50)";
    report(10, "sensitivity-driven allocation beats uniform", pass, detail.str());
}

void criterion_12_zero_shot() {
    const std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8};
    int within = 0;
    double worst_ratio = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        const ReferenceNet<double> net = acceptance_reference_net(seed);
        Rng srng(6500 + std::uint64_t(seed));
        std::vector<Matrix<double>> few, inputs;
        for (int s = 0; s < 5; ++s)
            few.push_back(gaussian<double>(srng, kDefaultZeroShotRows, 16));
        for (int s = 0; s < 64; ++s) inputs.push_back(gaussian<double>(srng, 16, 16));
        const std::vector<Matrix<double>> zero{zero_shot_input(net, 8000 + seed)};
        const SensitivityProfile profile_few =
            compute_sensitivity(net, std::span<const Matrix<double>>(few),
                                CalibrationMode::few_shot)
                .to_profile();
        const SensitivityProfile profile_zero =
            compute_sensitivity(net, std::span<const Matrix<double>>(zero),
                                CalibrationMode::zero_shot)
                .to_profile();
        const std::uint64_t budget = 3 * profile_few.total_params();
        const BitAllocation alloc_few = allocate_dp(profile_few, candidates, budget);
        const BitAllocation alloc_zero = allocate_dp(profile_zero, candidates, budget);
        const double err_few =
            quantized_output_error(net, alloc_few.bits, 9000 + seed, inputs);
        const double err_zero =
            quantized_output_error(net, alloc_zero.bits, 9000 + seed, inputs);
        worst_ratio = std::max(worst_ratio, err_zero / std::max(1e-300, err_few));
        if (err_zero <= 2.0 * err_few) ++within;
    }
    std::ostringstream detail;
    detail.precision(3);
    detail << within << "/20 seeds within 2x, worst ratio " << worst_ratio;
    report(12, "zero-shot comparable to few-shot", within == 20, detail.str());
}

// ---------------------------------------------------------------------------
// Criterion 11: storage accounting and byte-exact container round trip.
// ---------------------------------------------------------------------------

void criterion_11_storage() {
    Rng rng(1111);
    const std::size_t d = 512;
    const std::size_t c = 512;
    const int bits = 3;
    Rng qrng(1112);
    QuantizedModel model;
    model.meta.seed = 1112;
    model.layers.emplace_back(
        "W0", quantize_layer(gaussian<float>(rng, d, c), bits, TrickFlags::none(), qrng));

    const std::vector<std::uint8_t> bytes = serialize_model(model);
    const double overhead_per_param =
        (double(bytes.size()) * 8.0 - double(d * c * bits)) / double(d * c);
    const double budget = (double(d) + 16.0 * double(c)) / double(d * c) + 0.01;

    const QuantizedModel back = parse_model(bytes.data(), bytes.size(), "in-memory");
    const std::vector<std::uint8_t> again = serialize_model(back);
    const bool round_trip = bytes == again;

    std::ostringstream detail;
    detail.precision(4);
    detail << "overhead " << overhead_per_param << " bits/param (budget " << budget
           << "), round trip " << (round_trip ? "byte-identical" : "DIFFERS");
    report(11, "storage accounting", overhead_per_param <= budget && round_trip,
           detail.str());
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion_1_and_2();
    criterion_3_bias();
    criterion_4_dp_exactness();
    criterion_5_gcd();
    criterion_6_transforms();
    criterion_7_estimator_identity();
    criterion_8_trick_exactness();
    criterion_9_gradients();
    criterion_10_allocation_beats_uniform();
    criterion_11_storage();
    criterion_12_zero_shot();
    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
