#include "mfglift/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mfglift/errors.hpp"
#include "mfglift/rng.hpp"

namespace mfglift {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

bool depends_on_measure(const Coefficient& coef) {
    for (const Term& t : coef.terms) {
        if (t.kind == TermKind::functional &&
            t.func.kind != FunctionalKind::constant) {
            return true;
        }
    }
    return false;
}

void require_times_equal(const std::vector<double>& a,
                         const std::vector<double>& b, const char* what) {
    bool ok = a.size() == b.size() && a.size() >= 2;
    const double scale = ok ? std::max(1.0, std::abs(a.back())) : 1.0;
    for (std::size_t k = 0; ok && k < a.size(); ++k) {
        ok = std::abs(a[k] - b[k]) <= 1e-9 * scale;
    }
    if (!ok) {
        throw GridMismatchError(std::string(what) +
                                ": time grids must coincide");
    }
}

/// Everything the per-step kernel needs, prepared once per time node so the
/// per-particle work is O(1) even for convolution coefficients.
struct SimContext {
    std::vector<double> times;
    std::vector<double> h;
    std::vector<double> sqh;
    std::vector<PreparedCoefficient> pb;
    std::vector<PreparedCoefficient> ps;
    std::vector<double> b0drift;
    std::vector<double> s0vol;
    std::vector<double> dB;
    double escape_lo = 0.0;
    double escape_hi = 0.0;

    /// The exact update expression, shared verbatim by the simulator and
    /// the residual audit so recomputation is bitwise.
    double raw_step(std::size_t k, double x, double a, double xi) const {
        const double drift = pb[k].at(x, a) + b0drift[k];
        const double vol = ps[k].at(x, a);
        return x + (drift * h[k] + vol * (sqh[k] * xi) + s0vol[k] * dB[k]);
    }

    double advance(std::size_t k, double x, double a, double xi,
                   std::size_t particle) const {
        const double next = raw_step(k, x, a, xi);
        if (!(next >= escape_lo && next <= escape_hi)) {
            throw BlowUpError("particle " + std::to_string(particle) +
                              " escaped to x=" + fmt(next) + " at t=" +
                              fmt(times[k + 1]));
        }
        return next;
    }
};

SimContext build_context(const MFGModel& model,
                         const std::vector<double>& times,
                         const BrownianPath* common,
                         const MeasureFlow* flow) {
    if (common && !flow) {
        throw InvalidArgumentError(
            "a shared noise path requires the flow its aggregate terms are "
            "evaluated on");
    }
    if (common) require_times_equal(times, common->times, "shared noise");
    if (flow) require_times_equal(times, flow->times, "measure flow");
    if (!flow && (depends_on_measure(model.coefficients.b) ||
                  depends_on_measure(model.coefficients.sigma))) {
        throw InvalidArgumentError(
            "state dynamics depend on the measure; a flow is required");
    }

    const std::size_t n_t = times.size() - 1;
    SimContext ctx;
    ctx.times = times;
    ctx.h.resize(n_t);
    ctx.sqh.resize(n_t);
    ctx.pb.resize(n_t);
    ctx.ps.resize(n_t);
    ctx.b0drift.assign(n_t, 0.0);
    ctx.s0vol.assign(n_t, 0.0);
    ctx.dB.assign(n_t, 0.0);

    ConvolutionCache cache;
    for (std::size_t k = 0; k < n_t; ++k) {
        ctx.h[k] = times[k + 1] - times[k];
        ctx.sqh[k] = std::sqrt(ctx.h[k]);
        const GridMeasure& mu = flow ? flow->measures[k] : model.lambda;
        ctx.pb[k] =
            prepare_coefficient(model.coefficients.b, times[k], mu, cache);
        ctx.ps[k] =
            prepare_coefficient(model.coefficients.sigma, times[k], mu, cache);
        if (common) {
            ctx.b0drift[k] = model.coefficients.b0.eval_tm(times[k], mu);
            ctx.s0vol[k] = model.coefficients.sigma0.eval_tm(times[k], mu);
            ctx.dB[k] = common->values[k + 1] - common->values[k];
            if (!std::isfinite(ctx.b0drift[k]) ||
                !std::isfinite(ctx.s0vol[k])) {
                throw PropagationError(
                    "aggregate coefficient not finite at t=" + fmt(times[k]) +
                    " (drift=" + fmt(ctx.b0drift[k]) + ", vol=" +
                    fmt(ctx.s0vol[k]) + ")");
            }
        }
    }

    // Blow-up envelope: the grid enlarged by what the prepared coefficients
    // can actually reach.  The interpolated base fields are clamped to the
    // grid, so max|base| plus the control part at the largest admissible
    // action bounds every simulated drift/volatility evaluation; integrating
    // those bounds (with a ten-standard-deviation allowance for the
    // idiosyncratic integral and the realized shared increments) gives a span
    // that extreme-but-admissible controls cannot leave.  A cap of fifty grid
    // ranges keeps the window finite so genuinely divergent dynamics still
    // trip the guard within a step or two.
    const double lo = model.lambda.x_min;
    const double hi = model.lambda.x_max();
    const double range = hi - lo;
    const double a_big =
        std::max(std::abs(model.a_min), std::abs(model.a_max));
    double drift_span = 0.0;
    double idio_var = 0.0;
    double shared_span = 0.0;
    for (std::size_t k = 0; k < n_t; ++k) {
        double b_base = 0.0;
        for (const double v : ctx.pb[k].base) b_base = std::max(b_base, std::abs(v));
        double s_base = 0.0;
        for (const double v : ctx.ps[k].base) s_base = std::max(s_base, std::abs(v));
        const double b_bound = b_base + std::abs(ctx.pb[k].control_lin) * a_big +
                               std::abs(ctx.pb[k].control_quad) * a_big * a_big +
                               std::abs(ctx.b0drift[k]);
        const double s_bound = s_base + std::abs(ctx.ps[k].control_lin) * a_big +
                               std::abs(ctx.ps[k].control_quad) * a_big * a_big;
        drift_span += b_bound * ctx.h[k];
        idio_var += s_bound * s_bound * ctx.h[k];
        shared_span += std::abs(ctx.s0vol[k] * ctx.dB[k]);
    }
    double slack = drift_span + 10.0 * std::sqrt(idio_var) + shared_span;
    if (!(slack <= 50.0 * range)) slack = 50.0 * range;
    const double margin = std::max(range, slack);
    ctx.escape_lo = lo - margin;
    ctx.escape_hi = hi + margin;
    return ctx;
}

double empirical_w1(std::vector<double> states, const GridMeasure& target) {
    return wasserstein(EmpiricalMeasure(std::move(states)), target, 1.0);
}

} // namespace

ParticleEnsemble simulate_particles(const MFGModel& model,
                                    const FeedbackControl& feedback,
                                    std::size_t N, double dt,
                                    const BrownianPath* common,
                                    const MeasureFlow* flow,
                                    std::uint64_t seed) {
    check_valid(model);
    if (N == 0) throw InvalidArgumentError("ensemble size must be at least 1");
    if (!(dt > 0.0)) throw InvalidArgumentError("dt must be positive");

    ParticleEnsemble out;
    out.N = N;
    out.times = make_time_grid(model.T, dt);
    out.common_seed = common ? common->seed : 0;
    const SimContext ctx = build_context(model, out.times, common, flow);
    const std::size_t n_t = out.times.size() - 1;

    out.paths.assign(N, std::vector<double>(n_t + 1));
    out.controls.assign(N, std::vector<double>(n_t + 1));
    out.idiosyncratic_seeds.resize(N);

    const QuantileFunction q0 = QuantileFunction::from_grid(model.lambda);
    for (std::size_t i = 0; i < N; ++i) {
        out.idiosyncratic_seeds[i] = derive_seed(seed, i);
        Rng rng(out.idiosyncratic_seeds[i]);
        double x = q0(rng.uniform());
        out.paths[i][0] = x;
        for (std::size_t k = 0; k < n_t; ++k) {
            const double a = feedback.at(out.times[k], x);
            out.controls[i][k] = a;
            x = ctx.advance(k, x, a, rng.normal(), i);
            out.paths[i][k + 1] = x;
        }
        out.controls[i][n_t] = feedback.at(out.times[n_t], x);
    }
    return out;
}

double check_fixed_point(const MeasureFlow& claimed,
                         const ParticleEnsemble& ensemble) {
    if (ensemble.N == 0 || ensemble.paths.size() != ensemble.N) {
        throw InvalidArgumentError("ensemble is empty or inconsistent");
    }
    require_times_equal(claimed.times, ensemble.times, "claimed flow");

    double sup = 0.0;
    std::vector<double> column(ensemble.N);
    for (std::size_t k = 0; k < claimed.times.size(); ++k) {
        for (std::size_t i = 0; i < ensemble.N; ++i) {
            column[i] = ensemble.paths[i][k];
        }
        sup = std::max(sup, empirical_w1(column, claimed.measures[k]));
    }
    return sup;
}

double check_fixed_point_streaming(const MFGModel& model,
                                   const FeedbackControl& feedback,
                                   const MeasureFlow& claimed, std::size_t N,
                                   double dt, const BrownianPath* common,
                                   std::uint64_t seed) {
    check_valid(model);
    if (N == 0) throw InvalidArgumentError("ensemble size must be at least 1");
    if (!(dt > 0.0)) throw InvalidArgumentError("dt must be positive");

    const std::vector<double> times = make_time_grid(model.T, dt);
    require_times_equal(claimed.times, times, "claimed flow");
    const SimContext ctx = build_context(model, times, common, &claimed);
    const std::size_t n_t = times.size() - 1;

    std::vector<Rng> rngs;
    rngs.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        rngs.emplace_back(derive_seed(seed, i));
    }
    const QuantileFunction q0 = QuantileFunction::from_grid(model.lambda);
    std::vector<double> states(N);
    for (std::size_t i = 0; i < N; ++i) states[i] = q0(rngs[i].uniform());

    double sup = empirical_w1(states, claimed.measures[0]);
    for (std::size_t k = 0; k < n_t; ++k) {
        for (std::size_t i = 0; i < N; ++i) {
            const double a = feedback.at(times[k], states[i]);
            states[i] = ctx.advance(k, states[i], a, rngs[i].normal(), i);
        }
        sup = std::max(sup, empirical_w1(states, claimed.measures[k + 1]));
    }
    return sup;
}

std::vector<GapReport> check_optimality_by_deviation(
    const MFGModel& model, const MeasureFlow& flow,
    const FeedbackControl& feedback,
    const std::vector<FeedbackControl>& deviations, std::size_t N,
    const BrownianPath* common, std::uint64_t seed) {
    check_valid(model);
    if (N == 0) throw InvalidArgumentError("ensemble size must be at least 1");
    if (flow.times.size() < 2) {
        throw InvalidArgumentError("flow must cover at least one step");
    }

    const std::vector<double>& times = flow.times;
    const std::size_t n_t = times.size() - 1;
    const SimContext ctx = build_context(model, times, common, &flow);

    ConvolutionCache cache;
    std::vector<PreparedCoefficient> pf(n_t);
    for (std::size_t k = 0; k < n_t; ++k) {
        pf[k] = prepare_coefficient(model.coefficients.f, times[k],
                                    flow.measures[k], cache);
    }
    const PreparedCoefficient pg = prepare_coefficient(
        model.coefficients.g, times[n_t], flow.measures[n_t], cache);

    const QuantileFunction q0 = QuantileFunction::from_grid(model.lambda);
    const auto objective = [&](const FeedbackControl& ctrl,
                               std::vector<double>& J) {
        for (std::size_t i = 0; i < N; ++i) {
            Rng rng(derive_seed(seed, i));
            double x = q0(rng.uniform());
            double cost = 0.0;
            for (std::size_t k = 0; k < n_t; ++k) {
                const double a = ctrl.at(times[k], x);
                cost += pf[k].at(x, a) * ctx.h[k];
                x = ctx.advance(k, x, a, rng.normal(), i);
            }
            J[i] = cost + pg.at(x, 0.0);
        }
    };

    std::vector<double> j_base(N);
    objective(feedback, j_base);

    std::vector<GapReport> out;
    out.reserve(deviations.size());
    std::vector<double> j_dev(N);
    for (const FeedbackControl& dev : deviations) {
        objective(dev, j_dev);
        double mean_gap = 0.0;
        for (std::size_t i = 0; i < N; ++i) mean_gap += j_base[i] - j_dev[i];
        mean_gap /= static_cast<double>(N);
        double var = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double d = j_base[i] - j_dev[i] - mean_gap;
            var += d * d;
        }
        GapReport report;
        report.gap = mean_gap;
        report.std_err =
            N > 1 ? std::sqrt(var / static_cast<double>(N - 1) /
                              static_cast<double>(N))
                  : 0.0;
        out.push_back(report);
    }
    return out;
}

std::vector<FeedbackControl> default_deviation_family(
    const MFGModel& model, const FeedbackControl& feedback) {
    const double lo = model.a_min;
    const double hi = model.a_max;
    const auto transformed = [&](const auto& map) {
        FeedbackControl ctrl = feedback;
        for (auto& row : ctrl.values) {
            for (double& v : row) v = std::clamp(map(v), lo, hi);
        }
        return ctrl;
    };

    std::vector<FeedbackControl> out;
    out.push_back(transformed([](double) { return 0.0; }));
    out.push_back(transformed([&](double) { return lo; }));
    out.push_back(transformed([&](double) { return hi; }));
    out.push_back(transformed([](double v) { return 0.9 * v; }));
    for (const double eps : {0.01, 0.02, 0.04}) {
        out.push_back(transformed([eps](double v) { return v + eps; }));
    }
    return out;
}

std::vector<std::string> default_deviation_labels() {
    return {"zero_control",       "constant_a_min",    "constant_a_max",
            "feedback_scaled_0.9", "feedback_plus_0.01", "feedback_plus_0.02",
            "feedback_plus_0.04"};
}

FeedbackControl translate_feedback(const FeedbackControl& feedback,
                                   const ShiftPath& shift) {
    require_times_equal(feedback.times, shift.times, "shift path");
    FeedbackControl out = feedback;
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        const double q = shift.values[k];
        for (std::size_t j = 0; j < out.grid.n; ++j) {
            out.values[k][j] =
                feedback.at(out.times[k], out.grid.node(j) - q);
        }
    }
    return out;
}

ObjectiveEqualityReport check_objective_equality(const NCNSolution& base,
                                                 const CNSolution& lifted,
                                                 std::size_t N,
                                                 std::uint64_t seed) {
    if (N == 0) throw InvalidArgumentError("ensemble size must be at least 1");
    require_times_equal(base.flow.times, lifted.flow.times, "lifted flow");
    require_times_equal(base.flow.times, lifted.shift.times, "shift path");

    const MFGModel& model = base.model;
    const std::vector<double>& times = base.flow.times;
    const std::size_t n_t = times.size() - 1;
    const SimContext ctx = build_context(model, times, nullptr, &base.flow);

    const Coefficient& f = model.coefficients.f;
    const Coefficient& g = model.coefficients.g;
    const QuantileFunction q0 = QuantileFunction::from_grid(model.lambda);

    double sum_plain = 0.0;
    double sum_translated = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        Rng rng(derive_seed(seed, i));
        double y = q0(rng.uniform());
        double j_plain = 0.0;
        double j_translated = 0.0;
        for (std::size_t k = 0; k < n_t; ++k) {
            const double a = base.feedback.at(times[k], y);
            j_plain += f.eval(times[k], y, base.flow.measures[k], a) * ctx.h[k];
            j_translated += f.eval(times[k], y + lifted.shift.values[k],
                                   lifted.flow.measures[k], a) *
                            ctx.h[k];
            y = ctx.advance(k, y, a, rng.normal(), i);
        }
        j_plain += g.eval(times[n_t], y, base.flow.measures[n_t], 0.0);
        j_translated += g.eval(times[n_t], y + lifted.shift.values[n_t],
                               lifted.flow.measures[n_t], 0.0);
        sum_plain += j_plain;
        sum_translated += j_translated;
    }

    ObjectiveEqualityReport report;
    report.j_plain = sum_plain / static_cast<double>(N);
    report.j_translated = sum_translated / static_cast<double>(N);
    report.err = std::abs(report.j_translated - report.j_plain);
    return report;
}

double check_sde_residual(const MFGModel& model,
                          const FeedbackControl& feedback,
                          const ParticleEnsemble& ensemble,
                          const BrownianPath* common,
                          const MeasureFlow* flow) {
    if (ensemble.N == 0 || ensemble.paths.size() != ensemble.N ||
        ensemble.controls.size() != ensemble.N ||
        ensemble.idiosyncratic_seeds.size() != ensemble.N ||
        ensemble.times.size() < 2) {
        throw InvalidArgumentError("ensemble is empty or inconsistent");
    }
    const std::vector<double>& times = ensemble.times;
    const std::size_t n_t = times.size() - 1;
    const SimContext ctx = build_context(model, times, common, flow);
    const QuantileFunction q0 = QuantileFunction::from_grid(model.lambda);

    double residual = 0.0;
    for (std::size_t i = 0; i < ensemble.N; ++i) {
        const std::vector<double>& path = ensemble.paths[i];
        const std::vector<double>& ctrl = ensemble.controls[i];
        if (path.size() != n_t + 1 || ctrl.size() != n_t + 1) {
            throw InvalidArgumentError("ensemble is empty or inconsistent");
        }
        Rng rng(ensemble.idiosyncratic_seeds[i]);
        residual = std::max(residual, std::abs(path[0] - q0(rng.uniform())));
        for (std::size_t k = 0; k < n_t; ++k) {
            residual = std::max(
                residual, std::abs(ctrl[k] - feedback.at(times[k], path[k])));
            const double predicted =
                ctx.raw_step(k, path[k], ctrl[k], rng.normal());
            residual = std::max(residual, std::abs(path[k + 1] - predicted));
        }
        residual = std::max(
            residual,
            std::abs(ctrl[n_t] - feedback.at(times[n_t], path[n_t])));
    }
    return residual;
}

VerificationReport::VerificationReport()
    : fixed_point_W1(std::numeric_limits<double>::quiet_NaN()),
      fixed_point_tol(std::numeric_limits<double>::quiet_NaN()),
      objective_equality_err(std::numeric_limits<double>::quiet_NaN()),
      objective_equality_tol(std::numeric_limits<double>::quiet_NaN()),
      sde_residual(std::numeric_limits<double>::quiet_NaN()),
      sde_residual_tol(std::numeric_limits<double>::quiet_NaN()) {}

bool VerificationReport::all_pass() const {
    bool pass = true;
    if (!std::isnan(fixed_point_W1)) {
        pass = pass && fixed_point_W1 <= fixed_point_tol;
    }
    for (const GapReport& g : optimality_gaps) {
        pass = pass && g.gap >= -(3.0 * g.std_err + gap_budget);
    }
    if (!std::isnan(objective_equality_err)) {
        pass = pass && objective_equality_err <= objective_equality_tol;
    }
    if (!std::isnan(sde_residual)) {
        pass = pass && sde_residual <= sde_residual_tol;
    }
    return pass;
}

std::string VerificationReport::to_csv() const {
    std::ostringstream os;
    os << "check,value,tolerance,pass\n";
    const auto row = [&os](const std::string& name, double value, double tol,
                           bool pass) {
        os << name << ',' << fmt(value) << ',' << fmt(tol) << ','
           << (pass ? "true" : "false") << '\n';
    };
    if (!std::isnan(fixed_point_W1)) {
        row("fixed_point_W1", fixed_point_W1, fixed_point_tol,
            fixed_point_W1 <= fixed_point_tol);
    }
    for (std::size_t d = 0; d < optimality_gaps.size(); ++d) {
        const GapReport& g = optimality_gaps[d];
        const double tol = 3.0 * g.std_err + gap_budget;
        row("optimality_gap_" + std::to_string(d), g.gap, tol,
            g.gap >= -tol);
    }
    if (!std::isnan(objective_equality_err)) {
        row("objective_equality_err", objective_equality_err,
            objective_equality_tol,
            objective_equality_err <= objective_equality_tol);
    }
    if (!std::isnan(sde_residual)) {
        row("sde_residual", sde_residual, sde_residual_tol,
            sde_residual <= sde_residual_tol);
    }
    return os.str();
}

} // namespace mfglift
