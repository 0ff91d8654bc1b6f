#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mfglift/coefficients.hpp"
#include "mfglift/lift.hpp"
#include "mfglift/measures.hpp"
#include "mfglift/ncn_solver.hpp"

namespace mfglift {

/// Monte Carlo particle system approximating the law of the controlled
/// state. Paths are particle-major: paths[i][k] is the state of particle i
/// at time node k. Each particle owns a derived seed, so any single path
/// can be regenerated in isolation.
struct ParticleEnsemble {
    std::size_t N = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> paths;
    /// controls[i][k] is the control applied on [t_k, t_{k+1}); the last
    /// node records the feedback at the horizon for completeness.
    std::vector<std::vector<double>> controls;
    std::vector<std::uint64_t> idiosyncratic_seeds;
    /// Seed of the shared path (0 when simulated without one).
    std::uint64_t common_seed = 0;
};

/// Euler-Maruyama simulation of N particles under a feedback control.
/// Initial states are i.i.d. draws from the model's initial law via its
/// quantile function; particle i consumes the stream seeded with
/// derive_seed(seed, i) (one uniform for the initial state, then one
/// normal per step). With `common`, the shared increments enter through
/// the aggregate pair (b0, sigma0) evaluated on `flow`, which then also
/// supplies the measure argument of b and sigma; without a flow, b and
/// sigma must be measure-free and the control problem is the plain one.
/// Out-of-grid states evaluate coefficients and feedback with the state
/// clamped to the grid; a state beyond the envelope the coefficients can
/// reach from the grid (integrated drift/volatility bounds at the largest
/// admissible action, capped at fifty grid ranges) throws BlowUpError
/// naming the particle.
ParticleEnsemble simulate_particles(const MFGModel& model,
                                    const FeedbackControl& feedback,
                                    std::size_t N, double dt,
                                    const BrownianPath* common = nullptr,
                                    const MeasureFlow* flow = nullptr,
                                    std::uint64_t seed = 0);

/// Sup over time nodes of W1 between the ensemble's empirical law and the
/// claimed flow, by sorted-sample vs grid-quantile coupling. When the
/// ensemble shared one noise path, the empirical law estimates the
/// conditional law given that path, so this realizes the consistency
/// condition of an equilibrium.
double check_fixed_point(const MeasureFlow& claimed,
                         const ParticleEnsemble& ensemble);

/// Same check without materializing paths: particles advance one step at
/// a time and each node's W1 is folded into the running sup, so memory is
/// O(N) regardless of the number of time nodes. Bitwise-identical to
/// simulate_particles + check_fixed_point with the same arguments, with
/// the claimed flow also supplying the dynamics' measure argument.
double check_fixed_point_streaming(const MFGModel& model,
                                   const FeedbackControl& feedback,
                                   const MeasureFlow& claimed, std::size_t N,
                                   double dt,
                                   const BrownianPath* common = nullptr,
                                   std::uint64_t seed = 0);

/// One paired Monte Carlo comparison J(candidate) - J(deviation).
struct GapReport {
    double gap = 0.0;
    /// Standard error of the paired per-particle differences.
    double std_err = 0.0;
};

/// Estimate J(feedback) - J(deviation) for each deviation with common
/// random numbers: every control sees the same initial draws, the same
/// idiosyncratic increments, and the same shared path, so first-order
/// comparisons are free of Monte Carlo noise. The measure flow is held
/// fixed at `flow` in all simulations (the flow is an input of the control
/// problem, not re-equilibrated), whose time grid also sets the step size.
std::vector<GapReport> check_optimality_by_deviation(
    const MFGModel& model, const MeasureFlow& flow,
    const FeedbackControl& feedback,
    const std::vector<FeedbackControl>& deviations, std::size_t N,
    const BrownianPath* common = nullptr, std::uint64_t seed = 0);

/// The default deviation family: zero control, the two control-interval
/// endpoints, the feedback scaled by 0.9, and pointwise shifts by
/// {0.01, 0.02, 0.04}, all clamped into [a_min, a_max].
std::vector<FeedbackControl> default_deviation_family(
    const MFGModel& model, const FeedbackControl& feedback);

/// Labels for default_deviation_family, in order.
std::vector<std::string> default_deviation_labels();

/// The translated control field alpha(t, x) = feedback(t, x - q_t),
/// tabulated on the feedback's own grid. This is the field a particle
/// system shifted by q should apply: the applied control along coupled
/// paths is unchanged, realizing the control's independence of the shared
/// noise. Exact (no interpolation error) when the feedback is piecewise
/// linear in x, e.g. the benchmark's.
FeedbackControl translate_feedback(const FeedbackControl& feedback,
                                   const ShiftPath& shift);

struct ObjectiveEqualityReport {
    /// |J_translated - J_plain| on the coupled samples.
    double err = 0.0;
    double j_plain = 0.0;
    double j_translated = 0.0;
};

/// Pathwise objective comparison between a base solution and its lifted
/// version: simulates the base ensemble Y under the base feedback and
/// flow, defines the lifted ensemble pathwise as X = Y + q with the same
/// controls, and evaluates both objectives on the coupled samples. Under
/// translation-invariant costs the integrands agree pointwise, so the
/// reported error isolates numerical roundoff, not statistics.
ObjectiveEqualityReport check_objective_equality(const NCNSolution& base,
                                                 const CNSolution& lifted,
                                                 std::size_t N,
                                                 std::uint64_t seed = 0);

/// Max absolute per-step state-equation residual of a stored ensemble:
/// every particle's noise is regenerated from its stored seed and each
/// stored transition is recomputed with the same arithmetic, so an
/// untampered ensemble reports exactly zero. Initial draws and recorded
/// controls are folded into the max.
double check_sde_residual(const MFGModel& model,
                          const FeedbackControl& feedback,
                          const ParticleEnsemble& ensemble,
                          const BrownianPath* common = nullptr,
                          const MeasureFlow* flow = nullptr);

/// Aggregated verification outcome. Fields left NaN are "not run" and are
/// skipped by the CSV and the pass predicate.
struct VerificationReport {
    double fixed_point_W1;
    double fixed_point_tol;
    std::vector<GapReport> optimality_gaps;
    /// Discretization part of the gap tolerance: a gap passes when
    /// gap >= -(3 std_err + gap_budget).
    double gap_budget = 0.0;
    double objective_equality_err;
    double objective_equality_tol;
    double sde_residual;
    double sde_residual_tol;

    VerificationReport();

    bool all_pass() const;
    /// CSV rows "check,value,tolerance,pass" for every check that ran.
    std::string to_csv() const;
};

} // namespace mfglift
