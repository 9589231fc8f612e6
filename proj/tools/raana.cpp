// Command-line pipeline: calibrate -> allocate -> quantize -> eval, plus a
// demo generator for a self-contained reference model. Exit codes: 0 ok,
// 2 configuration error, 3 infeasible budget, 4 corrupt input.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "raana/raana.hpp"

namespace {

using Clock = std::chrono::steady_clock;

std::string mode_name(raana::CalibrationMode mode) {
    switch (mode) {
        case raana::CalibrationMode::few_shot: return "few-shot";
        case raana::CalibrationMode::zero_shot: return "zero-shot";
        default: return "none";
    }
}

std::uint8_t mode_code(const std::string& name) {
    if (name == "few-shot") return std::uint8_t(raana::CalibrationMode::few_shot);
    if (name == "zero-shot") return std::uint8_t(raana::CalibrationMode::zero_shot);
    return std::uint8_t(raana::CalibrationMode::none);
}

// Collects report lines and mirrors them to stdout and an optional file.
class Report {
public:
    Report(std::string command, std::uint64_t seed) {
        line("raana-report v1");
        line("command " + command);
        line("format-version " + std::to_string(raana::kModelVersion));
        line("seed " + std::to_string(seed));
        start_ = Clock::now();
    }

    void line(const std::string& text) { lines_.push_back(text); }

    template <typename T>
    void kv(const std::string& key, const T& value) {
        std::ostringstream os;
        os.precision(17);
        os << key << ' ' << value;
        line(os.str());
    }

    void finish(const std::string& report_path) {
        const auto elapsed =
            std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start_);
        kv("timing total-ms", elapsed.count());
        line("end");
        for (const auto& l : lines_) std::cout << l << '\n';
        if (!report_path.empty()) {
            std::ofstream os(report_path, std::ios::trunc);
            if (!os) throw raana::error("cannot write report to '" + report_path + "'");
            for (const auto& l : lines_) os << l << '\n';
        }
    }

private:
    std::vector<std::string> lines_;
    Clock::time_point start_;
};

raana::ReferenceNet<float> net_from_archive(const raana::TensorArchive& archive,
                                            const std::string& path) {
    try {
        return raana::load_reference_net(archive);
    } catch (const raana::invalid_config_error& e) {
        throw raana::invalid_config_error("'" + path + "': " + e.what());
    }
}

std::vector<raana::Matrix<float>> samples_from_archive(const raana::TensorArchive& archive,
                                                       const std::string& path) {
    try {
        return raana::load_samples(archive);
    } catch (const raana::invalid_config_error& e) {
        throw raana::invalid_config_error("'" + path + "': " + e.what());
    }
}

raana::TrickFlags parse_tricks(const std::string& spec) {
    raana::TrickFlags flags = raana::TrickFlags::none();
    if (spec == "none" || spec.empty()) return flags;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "cent")
            flags.centralization = true;
        else if (item == "row-out")
            flags.row_outliers = true;
        else if (item == "col-out")
            flags.col_outliers = true;
        else
            throw raana::invalid_config_error(
                "unknown trick '" + item + "' (expected cent, col-out, row-out or none)");
    }
    return flags;
}

std::vector<double> abs_error_quantiles(std::vector<double>& errors) {
    std::sort(errors.begin(), errors.end());
    auto at = [&](double q) {
        if (errors.empty()) return 0.0;
        const double pos = q * double(errors.size() - 1);
        const std::size_t lo = std::size_t(pos);
        const std::size_t hi = std::min(errors.size() - 1, lo + 1);
        const double frac = pos - double(lo);
        return errors[lo] * (1.0 - frac) + errors[hi] * frac;
    };
    return {at(0.5), at(0.9), at(0.99), errors.empty() ? 0.0 : errors.back()};
}

int run_demo(const std::string& out_dir, std::uint64_t seed,
             const std::vector<std::size_t>& dims, std::size_t sample_count,
             std::size_t sample_rows, const std::string& report_path) {
    Report report("demo", seed);
    std::filesystem::create_directories(out_dir);
    raana::Rng rng(seed, 1);
    const std::vector<double> scales{1.6, 1.0, 0.5};
    const raana::ReferenceNet<float> net =
        raana::ReferenceNet<float>::random(dims, rng, scales);

    raana::TensorArchive archive;
    for (std::size_t k = 0; k < net.depth(); ++k)
        archive.add("W" + std::to_string(k), net.weights[k]);
    for (std::size_t s = 0; s < sample_count; ++s) {
        raana::Matrix<float> x(sample_rows, dims.front());
        raana::Rng srng(seed, 100 + s);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = float(srng.normal());
        archive.add("X" + std::to_string(s), x);
    }
    const std::string path = out_dir + "/model.ta";
    archive.write(path);
    report.kv("output archive", path);
    report.kv("layers", net.depth());
    report.kv("samples", sample_count);
    report.finish(report_path);
    return 0;
}

int run_calibrate(const std::string& model_path, const std::string& samples_path,
                  bool zero_shot, std::uint64_t seed, const std::string& out_path,
                  const std::string& components_path, const std::string& report_path) {
    Report report("calibrate", seed);
    report.kv("input model", model_path);
    const raana::TensorArchive archive = raana::TensorArchive::read(model_path);
    const raana::ReferenceNet<float> net = net_from_archive(archive, model_path);

    std::vector<raana::Matrix<float>> samples;
    raana::CalibrationMode mode;
    if (zero_shot) {
        mode = raana::CalibrationMode::zero_shot;
        samples.push_back(raana::zero_shot_input(net, seed));
        report.kv("param calibration", "zero-shot");
    } else {
        mode = raana::CalibrationMode::few_shot;
        if (samples_path.empty())
            throw raana::invalid_config_error("calibrate needs --samples or --zero-shot");
        report.kv("input samples", samples_path);
        const raana::TensorArchive sample_archive =
            samples_path == model_path ? archive : raana::TensorArchive::read(samples_path);
        samples = samples_from_archive(sample_archive, samples_path);
        report.kv("param calibration", "few-shot");
    }

    const raana::CalibrationReport calibration = raana::compute_sensitivity(
        net, std::span<const raana::Matrix<float>>(samples), mode);

    std::ofstream os(out_path, std::ios::trunc);
    if (!os) throw raana::error("cannot open '" + out_path + "' for writing");
    os << "# calibration " << mode_name(mode) << ' ' << calibration.sample_count << '\n';
    raana::write_profile(os, calibration.to_profile());
    report.kv("output profile", out_path);

    if (!components_path.empty()) {
        std::ofstream cs(components_path, std::ios::trunc);
        if (!cs) throw raana::error("cannot open '" + components_path + "' for writing");
        cs.precision(17);
        for (std::size_t k = 0; k < calibration.layers.size(); ++k) {
            const auto& layer = calibration.layers[k];
            cs << "layer " << layer.label << " weight-norm " << layer.weight_norm
               << " alpha " << layer.alpha << '\n';
            for (std::size_t s = 0; s < calibration.sample_count; ++s)
                cs << "layer " << layer.label << " sample " << s << " grad-norm "
                   << layer.grad_norms[s] << " input-norm " << layer.input_norms[s] << '\n';
        }
        report.kv("output components", components_path);
    }

    for (const auto& layer : calibration.layers) {
        std::ostringstream line;
        line.precision(17);
        line << "alpha " << layer.label << ' ' << layer.alpha;
        report.line(line.str());
    }
    report.finish(report_path);
    return 0;
}

// The calibrate stage stamps the profile with a leading comment; recover it
// so the allocation and model files can carry the summary forward.
void read_profile_stamp(const std::string& path, std::string& mode, std::uint32_t& samples) {
    std::ifstream is(path);
    std::string line;
    if (std::getline(is, line) && line.rfind("# calibration ", 0) == 0) {
        std::istringstream ls(line.substr(14));
        ls >> mode >> samples;
    }
}

int run_allocate(const std::string& profile_path, double avg_bits,
                 const std::string& candidates_spec, const std::string& out_path,
                 const std::string& report_path) {
    Report report("allocate", 0);
    report.kv("input profile", profile_path);
    report.kv("param bits-budget-avg", avg_bits);
    report.kv("param candidates", candidates_spec);

    std::ifstream is(profile_path);
    if (!is) throw raana::error("cannot open '" + profile_path + "' for reading");
    const raana::SensitivityProfile profile = raana::read_profile(is);
    std::string calibration_mode = "none";
    std::uint32_t calibration_samples = 0;
    read_profile_stamp(profile_path, calibration_mode, calibration_samples);

    std::vector<int> candidates;
    {
        std::stringstream ss(candidates_spec);
        std::string item;
        while (std::getline(ss, item, ','))
            try {
                candidates.push_back(std::stoi(item));
            } catch (const std::exception&) {
                throw raana::invalid_config_error("bad candidate bit width '" + item + "'");
            }
    }

    if (avg_bits <= 0)
        throw raana::invalid_config_error("--bits-budget-avg must be positive");
    const std::uint64_t total_params = profile.total_params();
    std::uint64_t budget = std::uint64_t(avg_bits * double(total_params));
    // snap down to a multiple of the parameter-count gcd so the reduction
    // keeps its full strength
    std::uint64_t param_gcd = 0;
    for (const auto& l : profile.layers) param_gcd = std::gcd(param_gcd, l.param_count);
    if (param_gcd > 1) budget -= budget % param_gcd;
    report.kv("budget-total", budget);

    const raana::BitAllocation allocation =
        raana::allocate_dp(profile, candidates, budget);

    std::ofstream os(out_path, std::ios::trunc);
    if (!os) throw raana::error("cannot open '" + out_path + "' for writing");
    raana::write_allocation(os, profile, allocation, calibration_mode, calibration_samples);
    report.kv("output allocation", out_path);
    report.kv("objective", allocation.objective);
    report.kv("budget-consumed", allocation.consumed_budget);
    report.kv("gcd", allocation.gcd);
    for (std::size_t k = 0; k < allocation.bits.size(); ++k)
        report.kv("bits " + profile.layers[k].label, allocation.bits[k]);
    report.finish(report_path);
    return 0;
}

int run_quantize(const std::string& model_path, const std::string& allocation_path,
                 const std::string& tricks_spec, std::uint64_t seed, unsigned threads,
                 const std::string& out_path, const std::string& report_path) {
    Report report("quantize", seed);
    report.kv("input model", model_path);
    report.kv("input allocation", allocation_path);
    report.kv("param tricks", tricks_spec);
    report.kv("param threads", threads);

    const raana::TensorArchive archive = raana::TensorArchive::read(model_path);
    const raana::ReferenceNet<float> net = net_from_archive(archive, model_path);

    std::ifstream is(allocation_path);
    if (!is) throw raana::error("cannot open '" + allocation_path + "' for reading");
    const raana::AllocationFile allocation = raana::read_allocation(is);
    if (allocation.labels.size() != net.depth())
        throw raana::invalid_config_error(
            "allocation covers " + std::to_string(allocation.labels.size()) +
            " layers but the model has " + std::to_string(net.depth()));
    for (std::size_t k = 0; k < net.depth(); ++k)
        if (allocation.labels[k] != "W" + std::to_string(k))
            throw raana::invalid_config_error("allocation layer '" + allocation.labels[k] +
                                              "' does not match model layer W" +
                                              std::to_string(k));
    {
        // the recorded consumed budget must reconcile with this model's
        // parameter counts, otherwise the allocation belongs to another model
        std::uint64_t consumed = 0;
        for (std::size_t k = 0; k < net.depth(); ++k)
            consumed += std::uint64_t(net.weights[k].rows()) * net.weights[k].cols() *
                        std::uint64_t(allocation.allocation.bits[k]);
        if (consumed != allocation.allocation.consumed_budget)
            throw raana::invalid_config_error(
                "allocation file was computed for a different model: consumed budget "
                "recorded as " + std::to_string(allocation.allocation.consumed_budget) +
                " but these weights give " + std::to_string(consumed));
    }

    const raana::TrickFlags flags = parse_tricks(tricks_spec);

    raana::QuantizedModel model;
    model.meta.seed = seed;
    model.meta.calibration_mode = mode_code(allocation.calibration_mode);
    model.meta.calibration_samples = allocation.calibration_samples;
    model.meta.allocation_objective = allocation.allocation.objective;
    model.meta.budget_total = allocation.allocation.total_budget;
    model.meta.budget_consumed = allocation.allocation.consumed_budget;
    model.meta.gcd = allocation.allocation.gcd;
    const std::uint64_t total_params = [&] {
        std::uint64_t sum = 0;
        for (const auto& w : net.weights) sum += w.rows() * w.cols();
        return sum;
    }();
    model.meta.avg_bits_target =
        double(allocation.allocation.total_budget) / double(total_params);

    model.layers.resize(net.depth());
    raana::parallel_for(net.depth(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            raana::Rng layer_rng(seed, k);
            model.layers[k] = {"W" + std::to_string(k),
                               raana::quantize_layer(net.weights[k],
                                                     allocation.allocation.bits[k], flags,
                                                     layer_rng)};
        }
    });

    raana::write_model(out_path, model);
    report.kv("output quantized", out_path);
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        std::ostringstream line;
        line << "layer " << model.layers[k].first << " bits "
             << model.layers[k].second.bits << " quantized-cols "
             << model.layers[k].second.quantized_cols();
        report.line(line.str());
    }
    report.finish(report_path);
    return 0;
}

int run_eval(const std::string& quantized_path, const std::string& archive_path,
             unsigned threads, const std::string& report_path) {
    const raana::QuantizedModel model = raana::read_model(quantized_path);
    Report report("eval", model.meta.seed);
    report.kv("input quantized", quantized_path);
    report.kv("input archive", archive_path);
    report.kv("calibration",
              mode_name(raana::CalibrationMode(model.meta.calibration_mode)));

    const raana::TensorArchive archive = raana::TensorArchive::read(archive_path);
    const raana::ReferenceNet<float> net = net_from_archive(archive, archive_path);
    if (net.depth() != model.layers.size())
        throw raana::invalid_config_error("quantized model has " +
                                          std::to_string(model.layers.size()) +
                                          " layers, archive has " +
                                          std::to_string(net.depth()));
    const std::vector<raana::Matrix<float>> samples =
        samples_from_archive(archive, archive_path);

    std::vector<std::vector<double>> layer_errors(net.depth());
    double total_abs_error = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        raana::Matrix<float> current = samples[s];
        float exact_output = 0.0f;
        {
            const auto cache = raana::forward(net, samples[s]);
            exact_output = cache.output;
        }
        float quantized_output = 0.0f;
        for (std::size_t k = 0; k < net.depth(); ++k) {
            const raana::Matrix<float> estimated =
                raana::estimate_mm(current, model.layers[k].second, threads);
            const raana::Matrix<float> exact = matmul(current, net.weights[k]);
            for (std::size_t i = 0; i < estimated.rows(); ++i)
                for (std::size_t j = 0; j < estimated.cols(); ++j)
                    layer_errors[k].push_back(
                        std::fabs(double(estimated(i, j)) - double(exact(i, j))));
            if (k + 1 < net.depth()) {
                raana::Matrix<float> next(estimated.rows(), estimated.cols());
                for (std::size_t i = 0; i < next.rows(); ++i)
                    for (std::size_t j = 0; j < next.cols(); ++j)
                        next(i, j) = std::tanh(estimated(i, j));
                current = std::move(next);
            } else {
                float sum = 0.0f;
                for (std::size_t i = 0; i < estimated.rows(); ++i)
                    for (std::size_t j = 0; j < estimated.cols(); ++j)
                        sum += estimated(i, j);
                quantized_output = sum;
            }
        }
        const double abs_error = std::fabs(double(exact_output) - double(quantized_output));
        total_abs_error += abs_error;
        std::ostringstream line;
        line.precision(17);
        line << "sample " << s << " output-exact " << exact_output
             << " output-quantized " << quantized_output << " abs-error " << abs_error;
        report.line(line.str());
    }
    for (std::size_t k = 0; k < net.depth(); ++k) {
        const auto q = abs_error_quantiles(layer_errors[k]);
        std::ostringstream line;
        line.precision(17);
        line << "layer W" << k << " abs-error-q50 " << q[0] << " q90 " << q[1] << " q99 "
             << q[2] << " max " << q[3];
        report.line(line.str());
    }
    report.kv("mean-abs-error", total_abs_error / double(samples.size()));
    report.finish(report_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"randomized-Hadamard low-bit weight quantization pipeline"};
    app.require_subcommand(1);

    std::string model_path, samples_path, profile_path, allocation_path, quantized_path;
    std::string archive_path, out_path, report_path, components_path;
    std::string tricks_spec = "cent,col-out";
    std::string candidates_spec = "1,2,3,4,5,6,7,8";
    std::string out_dir = ".";
    std::string layers_spec = "16,12,10,8";
    bool zero_shot = false;
    double avg_bits = 0.0;
    std::uint64_t seed = 0;
    unsigned threads = raana::hardware_threads();
    std::size_t sample_count = raana::kDefaultFewShotSamples;
    std::size_t sample_rows = 32;

    auto* demo = app.add_subcommand("demo", "write a small reference model archive");
    demo->add_option("--out-dir", out_dir, "output directory");
    demo->add_option("--seed", seed, "generator seed");
    demo->add_option("--layers", layers_spec, "layer widths, comma separated");
    demo->add_option("--samples", sample_count, "number of sample tensors");
    demo->add_option("--rows", sample_rows, "rows per sample tensor");
    demo->add_option("--report", report_path, "also write the report here");

    auto* calibrate = app.add_subcommand("calibrate", "estimate layer sensitivities");
    calibrate->add_option("--model", model_path, "tensor archive with W* weights")
        ->required();
    calibrate->add_option("--samples", samples_path, "tensor archive with X* samples");
    calibrate->add_flag("--zero-shot", zero_shot, "use the synthetic zero-shot input");
    calibrate->add_option("--seed", seed, "seed for the zero-shot input");
    calibrate->add_option("--out", out_path, "sensitivity profile to write")->required();
    calibrate->add_option("--components", components_path,
                          "also write per-sample norm components");
    calibrate->add_option("--report", report_path, "also write the report here");

    auto* allocate = app.add_subcommand("allocate", "solve the bit-width allocation");
    allocate->add_option("--profile", profile_path, "sensitivity profile")->required();
    allocate->add_option("--bits-budget-avg", avg_bits, "average bits per parameter")
        ->required();
    allocate->add_option("--candidates", candidates_spec, "candidate bit widths");
    allocate->add_option("--out", out_path, "allocation file to write")->required();
    allocate->add_option("--report", report_path, "also write the report here");

    auto* quantize = app.add_subcommand("quantize", "quantize weights per allocation");
    quantize->add_option("--model", model_path, "tensor archive with W* weights")
        ->required();
    quantize->add_option("--allocation", allocation_path, "allocation file")->required();
    quantize->add_option("--tricks", tricks_spec,
                         "comma list of cent,col-out,row-out, or none");
    quantize->add_option("--seed", seed, "rotation seed");
    quantize->add_option("--threads", threads, "worker threads");
    quantize->add_option("--out", out_path, "quantized model to write")->required();
    quantize->add_option("--report", report_path, "also write the report here");

    auto* eval = app.add_subcommand("eval", "compare quantized and exact outputs");
    eval->add_option("--quantized", quantized_path, "quantized model file")->required();
    eval->add_option("--archive", archive_path,
                     "tensor archive with the W* weights and X* inputs")
        ->required();
    eval->add_option("--threads", threads, "worker threads");
    eval->add_option("--report", report_path, "also write the report here");

    try {
        app.parse(argc, argv);
        if (demo->parsed()) {
            std::vector<std::size_t> dims;
            std::stringstream ss(layers_spec);
            std::string item;
            while (std::getline(ss, item, ',')) dims.push_back(std::stoul(item));
            return run_demo(out_dir, seed, dims, sample_count, sample_rows, report_path);
        }
        if (calibrate->parsed())
            return run_calibrate(model_path, samples_path, zero_shot, seed, out_path,
                                 components_path, report_path);
        if (allocate->parsed())
            return run_allocate(profile_path, avg_bits, candidates_spec, out_path,
                                report_path);
        if (quantize->parsed())
            return run_quantize(model_path, allocation_path, tricks_spec, seed, threads,
                                out_path, report_path);
        if (eval->parsed())
            return run_eval(quantized_path, archive_path, threads, report_path);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const raana::infeasible_budget_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const raana::corrupt_data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const raana::corrupt_file_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const raana::unsupported_format_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
