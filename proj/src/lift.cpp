#include "mfglift/lift.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "mfglift/assumptions.hpp"
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

void require_same_times(const std::vector<double>& a,
                        const std::vector<double>& b, const char* what) {
    const double scale =
        std::max({1.0, a.empty() ? 0.0 : std::abs(a.back()),
                  b.empty() ? 0.0 : std::abs(b.back())});
    bool ok = a.size() == b.size() && a.size() >= 2;
    for (std::size_t k = 0; ok && k < a.size(); ++k) {
        ok = std::abs(a[k] - b[k]) <= 1e-9 * scale;
    }
    if (!ok) {
        throw GridMismatchError(std::string(what) +
                                ": time grids must coincide (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + " nodes)");
    }
}

} // namespace

BrownianPath sample_brownian(double T, double dt, std::uint64_t seed) {
    BrownianPath path;
    path.times = make_time_grid(T, dt);
    path.seed = seed;
    path.values.assign(path.times.size(), 0.0);
    Rng rng(seed);
    for (std::size_t k = 0; k + 1 < path.times.size(); ++k) {
        const double h = path.times[k + 1] - path.times[k];
        path.values[k + 1] = path.values[k] + std::sqrt(h) * rng.normal();
    }
    return path;
}

BrownianPath coarsen(const BrownianPath& path, std::size_t stride) {
    if (stride == 0 || path.times.size() < 2 ||
        (path.times.size() - 1) % stride != 0) {
        throw InvalidArgumentError(
            "coarsening stride must divide the step count (" +
            std::to_string(path.times.size() - 1) + " steps, stride " +
            std::to_string(stride) + ")");
    }
    BrownianPath out;
    out.seed = path.seed;
    for (std::size_t k = 0; k < path.times.size(); k += stride) {
        out.times.push_back(path.times[k]);
        out.values.push_back(path.values[k]);
    }
    return out;
}

ShiftPath solve_q_sde(const MeasureFlow& flow, const Coefficient& b0,
                      const Coefficient& sigma0, const BrownianPath& noise) {
    require_same_times(flow.times, noise.times, "translation SDE");
    if (flow.measures.size() != flow.times.size()) {
        throw GridMismatchError("translation SDE: flow has " +
                                std::to_string(flow.measures.size()) +
                                " measures for " +
                                std::to_string(flow.times.size()) + " times");
    }

    ShiftPath path;
    path.times = flow.times;
    path.values.assign(flow.times.size(), 0.0);
    double q = 0.0;
    for (std::size_t k = 0; k + 1 < flow.times.size(); ++k) {
        const double t_k = flow.times[k];
        const GridMeasure translated = shift_measure(flow.measures[k], q);
        const double drift = b0.eval_tm(t_k, translated);
        const double vol = sigma0.eval_tm(t_k, translated);
        if (!std::isfinite(drift) || !std::isfinite(vol)) {
            throw PropagationError(
                "translation SDE coefficient not finite at t=" + fmt(t_k) +
                ", q=" + fmt(q) + " (drift=" + fmt(drift) + ", vol=" +
                fmt(vol) + ")");
        }
        const double h = flow.times[k + 1] - flow.times[k];
        q += drift * h + vol * (noise.values[k + 1] - noise.values[k]);
        path.values[k + 1] = q;
    }
    return path;
}

CNSolution lift_solution(const NCNSolution& base, const BrownianPath& noise,
                         const LiftOptions& options) {
    if (!base.converged) {
        throw InvalidArgumentError(
            "cannot lift: base solution not converged");
    }
    const CoefficientSet& cs = base.model.coefficients;
    if (!cs.b.ti_certificate || !cs.sigma.ti_certificate ||
        !cs.f.ti_certificate || !cs.g.ti_certificate) {
        throw CertificationError(
            "cannot lift: b, sigma, f, g must carry translation-invariance "
            "certificates");
    }
    if (!options.lipschitz_waiver) {
        const AssumptionReport report = validate_existence_assumptions(
            base.model, options.validator_samples, options.validator_seed);
        for (const char* name : {"condition8_shift_lipschitz(b0)",
                                 "condition8_shift_lipschitz(sigma0)"}) {
            const ConditionReport* cond = report.find(name);
            if (cond == nullptr || !cond->pass) {
                throw CertificationError(
                    std::string("cannot lift: ") + name +
                    " failed (" +
                    (cond == nullptr ? "condition missing" : cond->witness) +
                    "); set the Lipschitz waiver to override");
            }
        }
    }

    CNSolution cn;
    cn.model = base.model;
    cn.base = base;
    cn.noise = noise;
    cn.shift = solve_q_sde(base.flow, cs.b0, cs.sigma0, noise);
    cn.flow.times = base.flow.times;
    cn.flow.measures.reserve(base.flow.measures.size());
    for (std::size_t k = 0; k < base.flow.measures.size(); ++k) {
        cn.flow.measures.push_back(
            shift_measure(base.flow.measures[k], cn.shift.values[k]));
    }
    return cn;
}

InverseLiftResult inverse_lift(const MFGModel& model, const MeasureFlow& flow,
                               const BrownianPath& noise) {
    require_same_times(flow.times, noise.times, "inverse lift");
    if (flow.measures.size() != flow.times.size()) {
        throw GridMismatchError("inverse lift: flow has " +
                                std::to_string(flow.measures.size()) +
                                " measures for " +
                                std::to_string(flow.times.size()) + " times");
    }
    const Coefficient& b0 = model.coefficients.b0;
    const Coefficient& sigma0 = model.coefficients.sigma0;

    InverseLiftResult result;
    result.shift.times = flow.times;
    result.shift.values.assign(flow.times.size(), 0.0);
    double q = 0.0;
    for (std::size_t k = 0; k + 1 < flow.times.size(); ++k) {
        const double t_k = flow.times[k];
        const double drift = b0.eval_tm(t_k, flow.measures[k]);
        const double vol = sigma0.eval_tm(t_k, flow.measures[k]);
        if (!std::isfinite(drift) || !std::isfinite(vol)) {
            throw PropagationError(
                "inverse lift coefficient not finite at t=" + fmt(t_k) +
                ", q=" + fmt(q) + " (drift=" + fmt(drift) + ", vol=" +
                fmt(vol) + ")");
        }
        const double h = flow.times[k + 1] - flow.times[k];
        q += drift * h + vol * (noise.values[k + 1] - noise.values[k]);
        result.shift.values[k + 1] = q;
    }

    result.base_flow.times = flow.times;
    result.base_flow.measures.reserve(flow.measures.size());
    for (std::size_t k = 0; k < flow.measures.size(); ++k) {
        result.base_flow.measures.push_back(
            shift_measure(flow.measures[k], -result.shift.values[k]));
    }
    return result;
}

RoundTripReport round_trip_check(const NCNSolution& base,
                                 const BrownianPath& noise,
                                 const LiftOptions& options) {
    const CNSolution cn = lift_solution(base, noise, options);
    const InverseLiftResult inv = inverse_lift(cn.model, cn.flow, cn.noise);

    RoundTripReport report;
    for (std::size_t k = 0; k < cn.shift.values.size(); ++k) {
        report.q_max_err =
            std::max(report.q_max_err,
                     std::abs(inv.shift.values[k] - cn.shift.values[k]));
    }
    for (std::size_t k = 0; k < base.flow.measures.size(); ++k) {
        report.max_W1 = std::max(
            report.max_W1, wasserstein(inv.base_flow.measures[k],
                                       base.flow.measures[k], 1.0));
    }
    return report;
}

} // namespace mfglift
