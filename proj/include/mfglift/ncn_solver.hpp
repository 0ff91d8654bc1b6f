#pragma once

#include <cstddef>
#include <vector>

#include "mfglift/coefficients.hpp"
#include "mfglift/measures.hpp"

namespace mfglift {

/// Uniform solver time grid: n_t = ceil(T / dt) intervals, nodes
/// t_k = T * (k / n_t) so the final node is exactly T.
std::vector<double> make_time_grid(double T, double dt);

/// Feedback control field alpha(t_i, x_j) on the solver grid. Values are
/// clamped into [a_min, a_max] by the producers. at(t, x) interpolates
/// bilinearly, clamping t and x to the field's range.
struct FeedbackControl {
    std::vector<double> times;
    SolverGrid grid;
    std::vector<std::vector<double>> values;

    double at(double t, double x) const;
};

/// Dynamic-programming value field v(t_i, x_j), same shape and
/// interpolation semantics as FeedbackControl. The terminal slice equals
/// the terminal reward on the grid to within roundoff by construction.
struct ValueFunction {
    std::vector<double> times;
    SolverGrid grid;
    std::vector<std::vector<double>> values;

    double at(double t, double x) const;
};

/// Equilibrium produced by the fixed-point or benchmark solver: the model,
/// the marginal flow (flow.measures[0] is the initial law exactly), the
/// optimal feedback, the value field, and the Picard residual history
/// (empty for the closed-form benchmark).
struct NCNSolution {
    MFGModel model;
    MeasureFlow flow;
    FeedbackControl feedback;
    ValueFunction value;
    std::vector<double> picard_residuals;
    bool converged = false;
};

/// Linear-quadratic benchmark data: running tracking weight c >= 0,
/// terminal weight c_T >= 0, idiosyncratic volatility sigma > 0. The model
/// is b = a, f = -a^2/2 - (c/2)(x - mean)^2, g = -(c_T/2)(x - mean)^2.
struct LQSpec {
    double c = 1.0;
    double c_T = 0.0;
    double sigma = 0.3;
};

struct HJBResult {
    ValueFunction value;
    FeedbackControl feedback;
};

/// Backward dynamic-programming sweep for the control problem against a
/// frozen measure flow. Terminal condition v(T, x) = g(x, flow_T); each
/// step maximizes b * dv + f over the control interval (closed form for
/// drift affine and running reward quadratic in the control, otherwise
/// scan plus golden-section search; ties break toward the control of
/// smallest absolute value), with explicit monotone upwind advection and
/// implicit diffusion under homogeneous Neumann boundaries. The returned
/// feedback re-runs the maximization against central differences of the
/// computed value slices. The flow must live on `grid` with times equal to
/// make_time_grid(model.T, dt).
/// Throws CflError (naming the required dt) when the explicit advection
/// CFL number exceeds 0.9, GridMismatchError on grid/time mismatches,
/// BlowUpError if the value field stops being finite.
HJBResult solve_hjb(const MFGModel& model, const MeasureFlow& flow, double dt,
                    const SolverGrid& grid);

/// Forward Fokker-Planck transport of model.lambda under the feedback
/// drift b(t, x, mu_t, alpha(t, x)) and diffusion sigma^2/2, where mu_t is
/// the solver's own current marginal (self-consistent McKean-Vlasov
/// stepping). Chang-Cooper exponential-fitting flux with no-flux
/// boundaries and implicit Euler stepping: mass is conserved exactly up to
/// roundoff and the update matrix is an M-matrix, so densities stay
/// nonnegative. Each step's mass defect beyond 1e-10 throws
/// MassConservationError; the roundoff-level defect is rescaled away.
/// The feedback must live on `grid` with times make_time_grid(model.T, dt),
/// and model.lambda must be anchored on `grid`.
MeasureFlow solve_fp(const MFGModel& model, const FeedbackControl& feedback,
                     double dt, const SolverGrid& grid);

/// Damped Picard iteration coupling solve_hjb and solve_fp, starting from
/// the constant-in-time initial law: flow_{k+1} = (1 - theta) * flow_k +
/// theta * solve_fp(solve_hjb(flow_k)) with the convex combination taken
/// density-pointwise; the residual is the sup over time nodes of the
/// 1-Wasserstein distance between consecutive flows. Stops at residual <=
/// fp_tol (converged) or after max_iter iterations (converged = false, no
/// exception). A final backward sweep against the settled flow produces
/// the reported feedback and value. The solver grid is always the initial
/// law's own grid. dt <= 0 selects the step automatically from the
/// explicit-advection CFL bound (number <= 0.45 at the initial law, at
/// most T/50), doubling the step count and restarting if a later iterate
/// still trips the CFL guard.
NCNSolution solve_ncn_fixed_point(const MFGModel& model, double fp_tol = 1e-4,
                                  int max_iter = 60, double theta = 0.5,
                                  double dt = 0.0);

/// The translation-invariant linear-quadratic model for spec: drift b = a,
/// constant volatility, f = -a^2/2 - (c/2)(x - mean(mu))^2 and g =
/// -(c_T/2)(x - mean(mu))^2 via identity-kernel convolution functionals.
/// Control bounds are wide enough that the benchmark feedback never
/// clamps on lambda's grid; all four coefficients are certified
/// translation invariant. No aggregate drift (b0 = sigma0 = 0); callers
/// wanting a common-noise variant set those terms afterwards.
MFGModel make_lq_model(const LQSpec& spec, const GridMeasure& lambda,
                       double T);

/// Closed-form benchmark equilibrium. Integrates the scalar Riccati
/// equation eta' = eta^2 - c backward from eta(T) = c_T and the offset
/// chi' = sigma^2 eta / 2 backward from chi(T) = 0 (both RK4 on half
/// steps), then the variance s' = -2 eta s + sigma^2 forward from
/// s(0) = var(lambda). Emits feedback alpha(t, x) = -eta_t (x - m0),
/// value v(t, x) = -(eta_t / 2)(x - m0)^2 + chi_t, and the Gaussian flow
/// N(m0, s_t) sampled on lambda's grid, with flow.measures[0] = lambda
/// exactly. The returned solution carries make_lq_model(spec, lambda, T)
/// and an empty residual history with converged = true.
NCNSolution solve_lq_riccati(const LQSpec& spec, const GridMeasure& lambda,
                             double T, double dt);

} // namespace mfglift
