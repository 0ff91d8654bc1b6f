#include "mfglift/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mfglift/archive.hpp"
#include "mfglift/lift.hpp"
#include "mfglift/measures.hpp"
#include "mfglift/ncn_solver.hpp"

using namespace mfglift;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory under the system temp root, removed on scope
/// exit so reruns never see stale files.
struct ScratchDir {
    fs::path path;

    explicit ScratchDir(const char* leaf)
        : path(fs::temp_directory_path() / leaf) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string sub(const char* leaf) const {
        return (path / leaf).string();
    }
};

NCNSolution closed_form_base() {
    return solve_lq_riccati(LQSpec{1.0, 0.0, 0.3},
                            gaussian_grid(0.0, 0.25, -4.0, 0.05, 161), 1.0,
                            0.05);
}

CNSolution lifted_solution(std::uint64_t seed) {
    NCNSolution base = closed_form_base();
    base.model.coefficients.b0.terms = {Term::constant(0.2)};
    base.model.coefficients.sigma0.terms = {Term::constant(0.3)};
    const BrownianPath noise = sample_brownian(1.0, 0.05, seed);
    return lift_solution(base, noise);
}

/// Runs the pipeline with output captured; returns {exit code, text}.
std::pair<int, std::string> run_captured(RunConfig config) {
    std::ostringstream sink;
    config.out = &sink;
    const int code = run(config);
    return {code, sink.str()};
}

/// Pulls the number printed after "<name> = " on a check line.
double printed_value(const std::string& text, const std::string& name) {
    const std::string key = name + " = ";
    const std::size_t at = text.find(key);
    REQUIRE(at != std::string::npos);
    return std::stod(text.substr(at + key.size()));
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

const char* kLqConfig = R"cfg(
[dynamics]
b = control
sigma = 0.3
T = 1
lambda = normal(0, 0.25)

[cost]
f = control2(-0.5) + conv(identity, quad(-0.5))
g = 0

[control]
a_min = -6
a_max = 6

[grid]
half_range = 4
dx = 0.05

[common_noise]
b0 = 0.2
sigma0 = 0.4
)cfg";

} // namespace

TEST_CASE("benchmark pipeline passes at coarse resolution") {
    const ScratchDir dir("mfglift_test_cli_bench");
    RunConfig config;
    config.command = "benchmark-lq";
    config.output_dir = dir.sub("out");
    config.dx = 0.1;
    config.dt = 0.01;

    const auto [code, text] = run_captured(config);
    CAPTURE(text);
    CHECK(code == 0);
    CHECK(text.find("[PASS] benchmark_sup_W1") != std::string::npos);

    // The archive holds both flows plus the node-wise comparison.
    for (const char* leaf : {"model.cfg", "flow.csv", "feedback.csv",
                             "value.csv", "meta.csv", "riccati_flow.csv",
                             "comparison.csv"}) {
        CHECK(fs::exists(fs::path(config.output_dir) / leaf));
    }

    // The archive is immediately consumable: verify runs from it alone.
    RunConfig check;
    check.command = "verify";
    check.archive_path = config.output_dir;
    check.n_particles = 4000;
    const auto [vcode, vtext] = run_captured(check);
    CAPTURE(vtext);
    CHECK(vcode == 0);
    CHECK(vtext.find("[PASS] fixed_point_W1") != std::string::npos);
}

TEST_CASE("lift refuses an unconverged base archive") {
    const ScratchDir dir("mfglift_test_cli_unconverged");
    NCNSolution base = closed_form_base();
    base.converged = false;
    base.picard_residuals = {0.9, 0.8};
    write_ncn_archive(base, dir.sub("base"));

    RunConfig config;
    config.command = "lift";
    config.archive_path = dir.sub("base");
    config.output_dir = dir.sub("cn");

    const auto [code, text] = run_captured(config);
    CHECK(code != 0);
    CHECK(text.find("base solution not converged") != std::string::npos);
}

TEST_CASE("verify flags a corrupted flow") {
    const ScratchDir dir("mfglift_test_cli_corrupt");
    CNSolution cn = lifted_solution(5);
    // Shift every flow slice after the initial one (readers take the
    // initial law from slice 0, so corrupting it would move the particles
    // too). The particle law keeps tracking the real equilibrium, leaving
    // the stored flow a full shift away at every later node: in 1D,
    // W1(mu, mu shifted by 0.5) is exactly 0.5.
    for (std::size_t k = 1; k < cn.flow.measures.size(); ++k) {
        cn.flow.measures[k] = shift_measure(cn.flow.measures[k], 0.5);
    }
    write_cn_archive(cn, dir.sub("cn"));

    RunConfig config;
    config.command = "verify";
    config.archive_path = dir.sub("cn");
    config.n_particles = 2000;

    const auto [code, text] = run_captured(config);
    CAPTURE(text);
    CHECK(code == 1);
    CHECK(text.find("[FAIL] fixed_point_W1") != std::string::npos);
    CHECK(printed_value(text, "fixed_point_W1") >= 0.4);
}

TEST_CASE("inverse lift reproduces the nested base archive") {
    const ScratchDir dir("mfglift_test_cli_inverse");
    write_cn_archive(lifted_solution(9), dir.sub("cn"));

    RunConfig config;
    config.command = "inverse-lift";
    config.archive_path = dir.sub("cn");
    config.output_dir = dir.sub("recovered");

    const auto [code, text] = run_captured(config);
    CAPTURE(text);
    CHECK(code == 0);
    CHECK(text.find("[PASS] recovered_shift_max_err") != std::string::npos);
    CHECK(text.find("[PASS] recovered_base_sup_W1") != std::string::npos);
    CHECK(fs::exists(fs::path(config.output_dir) / "recovered_base_flow.csv"));
    CHECK(fs::exists(fs::path(config.output_dir) / "recovered_shift.csv"));
}

TEST_CASE("seed sweeps merge identically across thread counts") {
    const ScratchDir dir("mfglift_test_cli_sweep");
    write_cn_archive(lifted_solution(3), dir.sub("cn"));

    RunConfig config;
    config.command = "verify";
    config.archive_path = dir.sub("cn");
    config.n_particles = 800;
    config.has_seed_sweep = true;
    config.seed_lo = 1;
    config.seed_hi = 3;

    config.threads = 1;
    const auto [code_serial, text_serial] = run_captured(config);
    const std::string sweep_serial =
        slurp((fs::path(dir.sub("cn")) / "sweep.csv").string());

    config.threads = 2;
    const auto [code_pool, text_pool] = run_captured(config);
    const std::string sweep_pool =
        slurp((fs::path(dir.sub("cn")) / "sweep.csv").string());

    CHECK(code_pool == code_serial);
    CHECK(text_pool == text_serial);
    CHECK(sweep_pool == sweep_serial);
    CHECK(text_serial.find("fixed_point_W1_p95") != std::string::npos);
}

TEST_CASE("assumption audit accepts the benchmark config") {
    const ScratchDir dir("mfglift_test_cli_assume");
    {
        std::ofstream f(dir.sub("lq.cfg"));
        f << kLqConfig;
    }

    RunConfig config;
    config.command = "check-assumptions";
    config.model_path = dir.sub("lq.cfg");

    const auto [code, text] = run_captured(config);
    CAPTURE(text);
    CHECK(code == 0);
    CHECK(text.find("[FAIL]") == std::string::npos);
    CHECK(text.find("constants: c1=") != std::string::npos);
}

TEST_CASE("invalid run configurations exit with an error line") {
    const auto expect_error = [](RunConfig config, const char* needle) {
        const auto [code, text] = run_captured(std::move(config));
        CAPTURE(text);
        CHECK(code == 2);
        CHECK(text.rfind("error: ", 0) == 0);
        CHECK(text.find(needle) != std::string::npos);
    };

    RunConfig bad_dx;
    bad_dx.command = "benchmark-lq";
    bad_dx.dx = -0.1;
    expect_error(bad_dx, "--dx must be positive");

    RunConfig bad_theta;
    bad_theta.command = "solve-ncn";
    bad_theta.theta = 1.5;
    expect_error(bad_theta, "--theta must lie in (0, 1]");

    RunConfig bad_n;
    bad_n.command = "verify";
    bad_n.n_particles = 0;
    expect_error(bad_n, "--n-particles must be at least 1");

    RunConfig bad_seeds;
    bad_seeds.command = "verify";
    bad_seeds.has_seed_sweep = true;
    bad_seeds.seed_lo = 5;
    bad_seeds.seed_hi = 2;
    expect_error(bad_seeds, "--seeds a..b needs a <= b");

    RunConfig bad_command;
    bad_command.command = "explode";
    expect_error(bad_command, "unknown command");

    RunConfig missing_archive;
    missing_archive.command = "verify";
    missing_archive.archive_path = "/nonexistent/archive";
    const auto [code, text] = run_captured(missing_archive);
    CHECK(code == 2);
    CHECK(text.rfind("error: ", 0) == 0);
}
