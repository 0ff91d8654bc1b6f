#include "mfglift/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mfglift/archive.hpp"
#include "mfglift/assumptions.hpp"
#include "mfglift/errors.hpp"
#include "mfglift/lift.hpp"
#include "mfglift/measures.hpp"
#include "mfglift/model_io.hpp"
#include "mfglift/ncn_solver.hpp"
#include "mfglift/verify.hpp"

namespace mfglift {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void check_line(std::ostream& os, bool pass, const std::string& name,
                double value, const char* rel, double bound) {
    os << (pass ? "[PASS] " : "[FAIL] ") << name << " = " << fmt(value)
       << " (" << rel << ' ' << fmt(bound) << ")\n";
}

void require_nonempty(const std::string& value, const char* what) {
    if (value.empty()) {
        throw InvalidArgumentError(std::string(what));
    }
}

void make_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw InvalidArgumentError("cannot create output directory " + dir +
                                   ": " + ec.message());
    }
}

/// Moment-matched resampling of the (gaussian by construction) initial law
/// onto a finer or coarser grid with the same left edge and span.
void regrid_initial_law(MFGModel& model, double dx) {
    const GridMeasure& lam = model.lambda;
    const double span = lam.x_max() - lam.x_min;
    const long long n = std::llround(span / dx) + 1;
    if (n < 2) {
        throw InvalidArgumentError("dx " + fmt(dx) +
                                   " leaves fewer than 2 grid nodes");
    }
    model.lambda = gaussian_grid(mean(lam), variance(lam), lam.x_min, dx,
                                 static_cast<std::size_t>(n));
}

double sup_w1(const MeasureFlow& a, const MeasureFlow& b) {
    if (a.times.size() != b.times.size()) {
        throw InvalidArgumentError("flows have different time grids (" +
                                   std::to_string(a.times.size()) + " vs " +
                                   std::to_string(b.times.size()) + " nodes)");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        worst = std::max(worst, wasserstein(a.measures[k], b.measures[k], 1));
    }
    return worst;
}

double percentile95(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double rank = std::ceil(0.95 * static_cast<double>(n));
    const std::size_t idx =
        std::min(n - 1, static_cast<std::size_t>(std::max(1.0, rank)) - 1);
    return values[idx];
}

/// Worker count: the flag wins, else the hardware count, with the
/// MFGLIFT_THREADS environment variable as a hard cap either way.
int resolve_threads(int flag, std::size_t jobs) {
    long n = flag > 0 ? flag
                      : static_cast<long>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("MFGLIFT_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap > 0) n = std::min(n, cap);
    }
    return static_cast<int>(
        std::min<long>(n, static_cast<long>(std::max<std::size_t>(jobs, 1))));
}

/// Fan independent jobs over a small pool and merge results in job order.
/// The first exception wins and is rethrown after the pool drains.
template <typename Job>
std::vector<double> run_sweep(std::size_t jobs, int threads, const Job& job) {
    std::vector<double> results(jobs, 0.0);
    if (threads <= 1) {
        for (std::size_t i = 0; i < jobs; ++i) results[i] = job(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs) return;
            try {
                results[i] = job(i);
            } catch (...) {
                const std::lock_guard<std::mutex> hold(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

void write_two_column_csv(const std::string& path, const char* header,
                          const std::vector<double>& a,
                          const std::vector<double>& b) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("cannot open " + path);
    std::fprintf(f, "%s\n", header);
    for (std::size_t k = 0; k < a.size(); ++k) {
        std::fprintf(f, "%.17g,%.17g\n", a[k], b[k]);
    }
    std::fclose(f);
}

int cmd_solve_ncn(const RunConfig& config, std::ostream& out) {
    require_nonempty(config.model_path, "solve-ncn needs --config <model file>");
    require_nonempty(config.output_dir, "solve-ncn needs --output <directory>");
    make_output_dir(config.output_dir);

    MFGModel model = parse_model(config.model_path);
    if (config.dx > 0.0) regrid_initial_law(model, config.dx);

    const NCNSolution solution = solve_ncn_fixed_point(
        model, config.fp_tol, config.max_iter, config.theta, config.dt);
    write_ncn_archive(solution, config.output_dir);

    const double residual = solution.picard_residuals.empty()
                                ? 0.0
                                : solution.picard_residuals.back();
    check_line(out, solution.converged, "picard_residual", residual, "<=",
               config.fp_tol);
    out << "archive written to " << config.output_dir << "\n";
    return solution.converged ? 0 : 1;
}

int cmd_benchmark_lq(const RunConfig& config, std::ostream& out) {
    require_nonempty(config.output_dir,
                     "benchmark-lq needs --output <directory>");
    make_output_dir(config.output_dir);

    const double dx = config.dx > 0.0 ? config.dx : 0.02;
    const double dt = config.dt > 0.0 ? config.dt : 5e-4;

    GridMeasure lambda;
    double T = 1.0;
    if (!config.model_path.empty()) {
        MFGModel declared = parse_model(config.model_path);
        if (config.dx > 0.0) regrid_initial_law(declared, config.dx);
        lambda = declared.lambda;
        T = declared.T;
    } else {
        const long long n = std::llround(8.0 / dx) + 1;
        lambda = gaussian_grid(0.0, 0.25, -4.0, dx,
                               static_cast<std::size_t>(n));
    }

    const LQSpec spec{1.0, 0.0, 0.3};
    const NCNSolution exact = solve_lq_riccati(spec, lambda, T, dt);
    const NCNSolution grid = solve_ncn_fixed_point(
        exact.model, config.fp_tol, config.max_iter, config.theta, dt);

    write_ncn_archive(grid, config.output_dir);
    write_flow_csv(exact.flow,
                   (fs::path(config.output_dir) / "riccati_flow.csv").string());

    std::vector<double> gaps(grid.flow.times.size(), 0.0);
    for (std::size_t k = 0; k < grid.flow.times.size(); ++k) {
        gaps[k] =
            wasserstein(grid.flow.measures[k], exact.flow.measures[k], 1);
    }
    write_two_column_csv(
        (fs::path(config.output_dir) / "comparison.csv").string(), "t,W1",
        grid.flow.times, gaps);

    // 5e-3 is the pinned budget at the reference resolution (dx = 0.02,
    // dt = 5e-4); both schemes are first order, so the budget scales
    // linearly with dx + dt on coarser runs.
    const double tol = std::max(5e-3, 5e-3 * (dx + dt) / 0.0205);
    const double worst = *std::max_element(gaps.begin(), gaps.end());

    const double residual =
        grid.picard_residuals.empty() ? 0.0 : grid.picard_residuals.back();
    check_line(out, grid.converged, "picard_residual", residual, "<=",
               config.fp_tol);
    check_line(out, worst <= tol, "benchmark_sup_W1", worst, "<=", tol);
    out << "archive written to " << config.output_dir << "\n";
    return (grid.converged && worst <= tol) ? 0 : 1;
}

int cmd_lift(const RunConfig& config, std::ostream& out) {
    require_nonempty(config.archive_path,
                     "lift needs a base-equilibrium archive");
    require_nonempty(config.output_dir, "lift needs --output <directory>");
    make_output_dir(config.output_dir);

    const NCNSolution base = read_ncn_archive(config.archive_path);
    const BrownianPath noise =
        sample_brownian(base.model.T, base.flow.dt(), config.noise_seed);
    LiftOptions options;
    options.lipschitz_waiver = config.lipschitz_waiver;
    const CNSolution cn = lift_solution(base, noise, options);
    write_cn_archive(cn, config.output_dir);

    out << "lift: shift_T = " << fmt(cn.shift.values.back())
        << " (noise seed " << config.noise_seed << ")\n";
    out << "archive written to " << config.output_dir << "\n";
    return 0;
}

int cmd_inverse_lift(const RunConfig& config, std::ostream& out) {
    require_nonempty(config.archive_path,
                     "inverse-lift needs an aggregate-noise archive");
    const CNSolution cn = read_cn_archive(config.archive_path);
    const InverseLiftResult inv = inverse_lift(cn.model, cn.flow, cn.noise);

    double q_err = 0.0;
    for (std::size_t k = 0; k < cn.shift.values.size(); ++k) {
        q_err = std::max(q_err,
                         std::abs(inv.shift.values[k] - cn.shift.values[k]));
    }
    const double base_w1 = sup_w1(inv.base_flow, cn.base.flow);

    if (!config.output_dir.empty()) {
        make_output_dir(config.output_dir);
        write_flow_csv(
            inv.base_flow,
            (fs::path(config.output_dir) / "recovered_base_flow.csv").string());
        write_two_column_csv(
            (fs::path(config.output_dir) / "recovered_shift.csv").string(),
            "t,shift", inv.shift.times, inv.shift.values);
    }

    // On an intact archive the reconstruction is exact; any daylight means
    // the flow, noise, or model was edited after the lift.
    const double tol = 1e-9;
    check_line(out, q_err <= tol, "recovered_shift_max_err", q_err, "<=", tol);
    check_line(out, base_w1 <= tol, "recovered_base_sup_W1", base_w1, "<=",
               tol);
    return (q_err <= tol && base_w1 <= tol) ? 0 : 1;
}

int cmd_verify(const RunConfig& config, std::ostream& out) {
    require_nonempty(config.archive_path, "verify needs an archive");
    const std::string report_dir =
        config.output_dir.empty() ? config.archive_path : config.output_dir;
    make_output_dir(report_dir);

    const std::size_t N = config.n_particles;
    VerificationReport report;
    report.fixed_point_tol = 0.05;
    report.sde_residual_tol = 1e-9;

    std::vector<std::string> gap_labels = default_deviation_labels();
    std::vector<double> sweep_seeds, sweep_w1;

    if (is_cn_archive(config.archive_path)) {
        const CNSolution cn = read_cn_archive(config.archive_path);
        const NCNSolution& base = cn.base;
        const double dt_sim = cn.flow.dt();
        LiftOptions options;
        options.lipschitz_waiver = config.lipschitz_waiver;
        const FeedbackControl fb = translate_feedback(base.feedback, cn.shift);

        if (config.has_seed_sweep) {
            const std::size_t jobs =
                static_cast<std::size_t>(config.seed_hi - config.seed_lo) + 1;
            const int threads = resolve_threads(config.threads, jobs);
            sweep_w1 = run_sweep(jobs, threads, [&](std::size_t i) {
                const std::uint64_t seed = config.seed_lo + i;
                const BrownianPath noise =
                    sample_brownian(base.model.T, dt_sim, seed);
                const CNSolution lifted = lift_solution(base, noise, options);
                const FeedbackControl fb_i =
                    translate_feedback(base.feedback, lifted.shift);
                return check_fixed_point_streaming(
                    lifted.model, fb_i, lifted.flow, N, dt_sim, &noise,
                    config.common_seed + seed);
            });
            for (std::size_t i = 0; i < jobs; ++i) {
                sweep_seeds.push_back(
                    static_cast<double>(config.seed_lo + i));
            }
            report.fixed_point_W1 = percentile95(sweep_w1);
        } else {
            report.fixed_point_W1 = check_fixed_point_streaming(
                cn.model, fb, cn.flow, N, dt_sim, &cn.noise,
                config.common_seed);
        }

        const ObjectiveEqualityReport oe = check_objective_equality(
            base, cn, std::min<std::size_t>(N, 2000), config.common_seed);
        report.objective_equality_err = oe.err;
        report.objective_equality_tol = 1e-8 * (1.0 + std::abs(oe.j_plain));

        report.optimality_gaps = check_optimality_by_deviation(
            cn.model, cn.flow, fb, default_deviation_family(cn.model, fb), N,
            &cn.noise, config.common_seed);
        report.gap_budget = 5.0 * (cn.flow.measures[0].dx + dt_sim);

        const ParticleEnsemble audit =
            simulate_particles(cn.model, fb, std::min<std::size_t>(N, 256),
                               dt_sim, &cn.noise, &cn.flow, config.common_seed);
        report.sde_residual =
            check_sde_residual(cn.model, fb, audit, &cn.noise, &cn.flow);
    } else {
        const NCNSolution sol = read_ncn_archive(config.archive_path);
        const double dt_sim = sol.flow.dt();

        if (config.has_seed_sweep) {
            const std::size_t jobs =
                static_cast<std::size_t>(config.seed_hi - config.seed_lo) + 1;
            const int threads = resolve_threads(config.threads, jobs);
            sweep_w1 = run_sweep(jobs, threads, [&](std::size_t i) {
                return check_fixed_point_streaming(
                    sol.model, sol.feedback, sol.flow, N, dt_sim, nullptr,
                    config.seed_lo + i);
            });
            for (std::size_t i = 0; i < jobs; ++i) {
                sweep_seeds.push_back(
                    static_cast<double>(config.seed_lo + i));
            }
            report.fixed_point_W1 = percentile95(sweep_w1);
        } else {
            report.fixed_point_W1 = check_fixed_point_streaming(
                sol.model, sol.feedback, sol.flow, N, dt_sim, nullptr,
                config.common_seed);
        }

        report.optimality_gaps = check_optimality_by_deviation(
            sol.model, sol.flow, sol.feedback,
            default_deviation_family(sol.model, sol.feedback), N, nullptr,
            config.common_seed);
        report.gap_budget = 5.0 * (sol.flow.measures[0].dx + dt_sim);

        const ParticleEnsemble audit = simulate_particles(
            sol.model, sol.feedback, std::min<std::size_t>(N, 256), dt_sim,
            nullptr, &sol.flow, config.common_seed);
        report.sde_residual = check_sde_residual(sol.model, sol.feedback,
                                                 audit, nullptr, &sol.flow);
    }

    if (!sweep_w1.empty()) {
        write_two_column_csv((fs::path(report_dir) / "sweep.csv").string(),
                             "seed,fixed_point_W1", sweep_seeds, sweep_w1);
    }
    {
        const std::string path =
            (fs::path(report_dir) / "report.csv").string();
        std::ofstream f(path);
        if (!f) throw Error("cannot open " + path);
        f << report.to_csv();
    }

    check_line(out, report.fixed_point_W1 <= report.fixed_point_tol,
               config.has_seed_sweep ? "fixed_point_W1_p95" : "fixed_point_W1",
               report.fixed_point_W1, "<=", report.fixed_point_tol);
    for (std::size_t d = 0; d < report.optimality_gaps.size(); ++d) {
        const GapReport& g = report.optimality_gaps[d];
        const double floor = -(3.0 * g.std_err + report.gap_budget);
        const std::string label =
            d < gap_labels.size() ? gap_labels[d] : std::to_string(d);
        check_line(out, g.gap >= floor, "gap(" + label + ")", g.gap, ">=",
                   floor);
    }
    if (!std::isnan(report.objective_equality_err)) {
        check_line(out,
                   report.objective_equality_err <=
                       report.objective_equality_tol,
                   "objective_equality_err", report.objective_equality_err,
                   "<=", report.objective_equality_tol);
    }
    check_line(out, report.sde_residual <= report.sde_residual_tol,
               "sde_residual", report.sde_residual, "<=",
               report.sde_residual_tol);
    out << "report written to "
        << (fs::path(report_dir) / "report.csv").string() << "\n";
    return report.all_pass() ? 0 : 1;
}

int cmd_check_assumptions(const RunConfig& config, std::ostream& out) {
    require_nonempty(config.model_path,
                     "check-assumptions needs --config <model file>");
    const ModelFile file = read_model_file(config.model_path);
    const AssumptionReport report =
        validate_existence_assumptions(file.model, 200);

    for (const ConditionReport& c : report.conditions) {
        out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
            << " (constant " << fmt(c.constant) << ")";
        if (!c.pass && !c.witness.empty()) out << " witness: " << c.witness;
        out << "\n";
    }
    out << "constants: c1=" << fmt(report.c1) << " c2=" << fmt(report.c2)
        << " c3=" << fmt(report.c3) << " c4=" << fmt(report.c4) << "\n";
    return report.all_pass ? 0 : 1;
}

void validate(const RunConfig& config) {
    if (config.dx < 0.0) {
        throw InvalidArgumentError("--dx must be positive");
    }
    if (config.dt < 0.0) {
        throw InvalidArgumentError("--dt must be positive");
    }
    if (!(config.fp_tol > 0.0)) {
        throw InvalidArgumentError("--fp-tol must be positive");
    }
    if (config.max_iter < 1) {
        throw InvalidArgumentError("--max-iter must be at least 1");
    }
    if (!(config.theta > 0.0) || config.theta > 1.0) {
        throw InvalidArgumentError("--theta must lie in (0, 1]");
    }
    if (config.n_particles < 1) {
        throw InvalidArgumentError("--n-particles must be at least 1");
    }
    if (config.has_seed_sweep && config.seed_hi < config.seed_lo) {
        throw InvalidArgumentError("--seeds a..b needs a <= b");
    }
}

} // namespace

int run(const RunConfig& config) {
    std::ostream& out = config.out ? *config.out : std::cout;
    try {
        validate(config);
        if (config.command == "solve-ncn") return cmd_solve_ncn(config, out);
        if (config.command == "benchmark-lq") {
            return cmd_benchmark_lq(config, out);
        }
        if (config.command == "lift") return cmd_lift(config, out);
        if (config.command == "inverse-lift") {
            return cmd_inverse_lift(config, out);
        }
        if (config.command == "verify") return cmd_verify(config, out);
        if (config.command == "check-assumptions") {
            return cmd_check_assumptions(config, out);
        }
        throw InvalidArgumentError("unknown command `" + config.command +
                                   "`; want solve-ncn, benchmark-lq, lift, "
                                   "inverse-lift, verify, or "
                                   "check-assumptions");
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace mfglift
