// End-to-end tests that drive the actual command-line binary.

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "raana/raana.hpp"

#ifndef RAANA_CLI_PATH
#error "RAANA_CLI_PATH must point at the raana binary"
#endif

using namespace raana;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RAANA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return (rc >= 0 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "raana_pipeline_tests";
    fs::create_directories(dir);
    return dir;
}

Matrix<float> gaussian(Rng& rng, std::size_t r, std::size_t c) {
    Matrix<float> m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = float(rng.normal());
    return m;
}

// L linear layers of width 16 with unit-scale init, plus calibration and
// evaluation archives.
void write_net_archives(const fs::path& dir, int seed, std::size_t depth,
                        std::size_t eval_inputs) {
    std::vector<std::size_t> dims(depth + 1, 16);
    std::vector<double> scales(depth, 1.0);
    Rng nrng(6000 + std::uint64_t(seed));
    const ReferenceNet<float> net = ReferenceNet<float>::random(dims, nrng, scales);
    Rng srng(6500 + std::uint64_t(seed));

    TensorArchive cal;
    for (std::size_t k = 0; k < net.depth(); ++k)
        cal.add("W" + std::to_string(k), net.weights[k]);
    for (int s = 0; s < 5; ++s) cal.add("X" + std::to_string(s), gaussian(srng, 16, 16));
    cal.write((dir / "cal.ta").string());

    TensorArchive eval;
    for (std::size_t k = 0; k < net.depth(); ++k)
        eval.add("W" + std::to_string(k), net.weights[k]);
    for (std::size_t s = 0; s < eval_inputs; ++s)
        eval.add("X" + std::to_string(s), gaussian(srng, 16, 16));
    eval.write((dir / "eval.ta").string());
}

double report_value(const fs::path& report, const std::string& key) {
    std::ifstream is(report);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind(key + " ", 0) == 0) {
            return std::stod(line.substr(key.size() + 1));
        }
    }
    FAIL("report key not found: ", key);
    return 0.0;
}

double pipeline_error(const fs::path& dir, int seed, double avg_bits) {
    std::ostringstream tag;
    tag << seed << "_" << avg_bits;
    const std::string profile = (dir / ("p" + tag.str() + ".txt")).string();
    const std::string alloc = (dir / ("a" + tag.str() + ".txt")).string();
    const std::string quantized = (dir / ("q" + tag.str() + ".raan")).string();
    const std::string report = (dir / ("r" + tag.str() + ".txt")).string();

    REQUIRE(run_cli("calibrate --model " + (dir / "cal.ta").string() + " --samples " +
                    (dir / "cal.ta").string() + " --out " + profile) == 0);
    std::ostringstream ab;
    ab << avg_bits;
    REQUIRE(run_cli("allocate --profile " + profile + " --bits-budget-avg " + ab.str() +
                    " --out " + alloc) == 0);
    REQUIRE(run_cli("quantize --model " + (dir / "cal.ta").string() + " --allocation " +
                    alloc + " --seed " + std::to_string(9500 + seed) + " --out " +
                    quantized) == 0);
    REQUIRE(run_cli("eval --quantized " + quantized + " --archive " +
                    (dir / "eval.ta").string() + " --report " + report) == 0);
    return report_value(report, "mean-abs-error");
}

}  // namespace

TEST_CASE("full pipeline completes and reports finite errors") {
    const fs::path dir = work_dir() / "smoke";
    fs::create_directories(dir);
    REQUIRE(run_cli("demo --out-dir " + dir.string() + " --seed 3") == 0);
    const std::string model = (dir / "model.ta").string();
    REQUIRE(run_cli("calibrate --model " + model + " --samples " + model + " --out " +
                    (dir / "profile.txt").string()) == 0);
    REQUIRE(run_cli("allocate --profile " + (dir / "profile.txt").string() +
                    " --bits-budget-avg 4.1 --out " + (dir / "alloc.txt").string()) == 0);
    REQUIRE(run_cli("quantize --model " + model + " --allocation " +
                    (dir / "alloc.txt").string() + " --seed 11 --out " +
                    (dir / "q.raan").string()) == 0);
    REQUIRE(run_cli("eval --quantized " + (dir / "q.raan").string() + " --archive " +
                    model + " --report " + (dir / "report.txt").string()) == 0);
    const double err = report_value(dir / "report.txt", "mean-abs-error");
    CHECK(std::isfinite(err));
    fs::remove_all(dir);
}

TEST_CASE("quantized files are byte-identical across reruns and thread counts") {
    const fs::path dir = work_dir() / "determinism";
    fs::create_directories(dir);
    write_net_archives(dir, 0, 3, 4);
    const std::string model = (dir / "cal.ta").string();
    REQUIRE(run_cli("calibrate --model " + model + " --samples " + model + " --out " +
                    (dir / "profile.txt").string()) == 0);
    REQUIRE(run_cli("allocate --profile " + (dir / "profile.txt").string() +
                    " --bits-budget-avg 3.3 --out " + (dir / "alloc.txt").string()) == 0);
    for (const char* variant : {"--threads 1", "--threads 4", "--threads 1"}) {
        REQUIRE(run_cli("quantize --model " + model + " --allocation " +
                        (dir / "alloc.txt").string() + " --seed 99 " + variant +
                        " --out " + (dir / (std::string("q_") + variant[10] + ".raan")).string()) == 0);
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
    };
    const std::string a = slurp(dir / "q_1.raan");
    const std::string b = slurp(dir / "q_4.raan");
    CHECK(!a.empty());
    CHECK(a == b);
    fs::remove_all(dir);
}

TEST_CASE("eval per-layer errors match an offline recomputation") {
    const fs::path dir = work_dir() / "integrity";
    fs::create_directories(dir);
    write_net_archives(dir, 1, 3, 6);
    const std::string model = (dir / "cal.ta").string();
    REQUIRE(run_cli("calibrate --model " + model + " --samples " + model + " --out " +
                    (dir / "profile.txt").string()) == 0);
    REQUIRE(run_cli("allocate --profile " + (dir / "profile.txt").string() +
                    " --bits-budget-avg 3.1 --out " + (dir / "alloc.txt").string()) == 0);
    REQUIRE(run_cli("quantize --model " + model + " --allocation " +
                    (dir / "alloc.txt").string() + " --seed 5 --out " +
                    (dir / "q.raan").string()) == 0);
    REQUIRE(run_cli("eval --quantized " + (dir / "q.raan").string() + " --archive " +
                    (dir / "eval.ta").string() + " --report " +
                    (dir / "report.txt").string()) == 0);

    // recompute the per-layer maxima offline from the serialized model
    const QuantizedModel qm = read_model((dir / "q.raan").string());
    const TensorArchive archive = TensorArchive::read((dir / "eval.ta").string());
    ReferenceNet<float> net;
    for (std::size_t k = 0;; ++k) {
        const auto* w = archive.find("W" + std::to_string(k));
        if (!w) break;
        net.weights.push_back(*w);
    }
    std::vector<double> max_err(net.depth(), 0.0);
    for (std::size_t s = 0;; ++s) {
        const auto* x = archive.find("X" + std::to_string(s));
        if (!x) break;
        Matrix<float> cur = *x;
        for (std::size_t k = 0; k < net.depth(); ++k) {
            const Matrix<float> est = estimate_mm(cur, qm.layers[k].second);
            const Matrix<float> exact = matmul(cur, net.weights[k]);
            for (std::size_t i = 0; i < est.rows(); ++i)
                for (std::size_t j = 0; j < est.cols(); ++j)
                    max_err[k] = std::max(
                        max_err[k], std::fabs(double(est(i, j)) - double(exact(i, j))));
            if (k + 1 < net.depth()) {
                Matrix<float> a(est.rows(), est.cols());
                for (std::size_t i = 0; i < est.rows(); ++i)
                    for (std::size_t j = 0; j < est.cols(); ++j)
                        a(i, j) = std::tanh(est(i, j));
                cur = std::move(a);
            }
        }
    }

    std::ifstream is(dir / "report.txt");
    std::string line;
    std::size_t layer = 0;
    while (std::getline(is, line)) {
        const std::string prefix = "layer W" + std::to_string(layer) + " ";
        if (line.rfind(prefix, 0) != 0) continue;
        const std::string max_key = " max ";
        const double reported = std::stod(line.substr(line.rfind(max_key) + max_key.size()));
        CHECK(std::fabs(reported - max_err[layer]) <= 1e-6 * std::max(1.0, max_err[layer]));
        ++layer;
    }
    CHECK(layer == net.depth());
    fs::remove_all(dir);
}

TEST_CASE("a larger bit budget does not hurt the evaluated error") {
    const fs::path dir = work_dir() / "ordering";
    fs::create_directories(dir);
    int wins = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        const fs::path sub = dir / std::to_string(seed);
        fs::create_directories(sub);
        write_net_archives(sub, seed, 8, 64);
        const double high = pipeline_error(sub, seed, 4.3);
        const double low = pipeline_error(sub, seed, 4.1);
        if (high <= low) ++wins;
        fs::remove_all(sub);
    }
    CHECK(wins >= seeds * 8 / 10);
    fs::remove_all(dir);
}

TEST_CASE("zero-shot calibration stays comparable to few-shot through the cli") {
    const fs::path dir = work_dir() / "zeroshot";
    fs::create_directories(dir);
    int within = 0;
    const int seeds = 6;
    for (int seed = 0; seed < seeds; ++seed) {
        const fs::path sub = dir / std::to_string(seed);
        fs::create_directories(sub);
        write_net_archives(sub, 40 + seed, 6, 32);
        const std::string model = (sub / "cal.ta").string();

        auto stage_error = [&](const std::string& calib_args, const std::string& tag) {
            const std::string profile = (sub / ("p" + tag + ".txt")).string();
            const std::string alloc = (sub / ("a" + tag + ".txt")).string();
            const std::string quantized = (sub / ("q" + tag + ".raan")).string();
            const std::string report = (sub / ("r" + tag + ".txt")).string();
            REQUIRE(run_cli("calibrate --model " + model + " " + calib_args + " --out " +
                            profile) == 0);
            REQUIRE(run_cli("allocate --profile " + profile +
                            " --bits-budget-avg 3.1 --out " + alloc) == 0);
            REQUIRE(run_cli("quantize --model " + model + " --allocation " + alloc +
                            " --seed " + std::to_string(700 + seed) + " --out " +
                            quantized) == 0);
            REQUIRE(run_cli("eval --quantized " + quantized + " --archive " +
                            (sub / "eval.ta").string() + " --report " + report) == 0);
            return report_value(report, "mean-abs-error");
        };
        const double few = stage_error("--samples " + model, "few");
        const double zero = stage_error("--zero-shot --seed " + std::to_string(seed), "zero");
        if (zero <= 2.0 * few) ++within;
        fs::remove_all(sub);
    }
    CHECK(within >= seeds - 1);
    fs::remove_all(dir);
}
