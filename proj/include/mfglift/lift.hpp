#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mfglift/coefficients.hpp"
#include "mfglift/measures.hpp"
#include "mfglift/ncn_solver.hpp"

namespace mfglift {

/// One realization of the aggregate noise on a uniform time grid.
/// values[0] = 0 and increments are N(0, step) drawn from the seeded
/// generator, so the path is a pure function of (T, dt, seed).
struct BrownianPath {
    std::vector<double> times;
    std::vector<double> values;
    std::uint64_t seed = 0;
};

BrownianPath sample_brownian(double T, double dt, std::uint64_t seed);

/// Keep every stride-th node (starting at 0); the last node must land on
/// the original horizon, so (times.size() - 1) must be divisible by
/// stride. Coarsening a path preserves its law on the coarse grid.
BrownianPath coarsen(const BrownianPath& path, std::size_t stride);

/// Trajectory of the aggregate translation q, values[0] = 0.
struct ShiftPath {
    std::vector<double> times;
    std::vector<double> values;
};

/// Equilibrium with aggregate noise assembled from a translation-invariant
/// base equilibrium: flow.measures[i] is base.flow.measures[i] translated
/// by shift.values[i] (a lossless re-anchoring, never a resample), and the
/// whole object is a deterministic function of (base, noise).
struct CNSolution {
    MFGModel model;
    NCNSolution base;
    BrownianPath noise;
    ShiftPath shift;
    MeasureFlow flow;
};

struct LiftOptions {
    /// Accept aggregate-drift coefficients that fail the structural
    /// Wasserstein-Lipschitz screen (the well-posedness hypothesis of the
    /// translation construction). Off by default; turning it on is an
    /// explicit user assertion that the pair is Lipschitz.
    bool lipschitz_waiver = false;
    /// Sampling effort and seed of the validator run backing the screen.
    int validator_samples = 60;
    std::uint64_t validator_seed = 4242;
};

/// Euler-Maruyama for the scalar translation SDE
///   dq = b0(t, mu_t(. - q)) dt + sigma0(t, mu_t(. - q)) dB,  q(0) = 0,
/// driven by the base flow: at each step the coefficients are evaluated on
/// the current translate shift_measure(flow_t, q_t). The flow and noise
/// time grids must coincide (the flow is only trusted at its own nodes —
/// no interpolation in time). Deterministic given (flow, noise).
/// Throws GridMismatchError on grid mismatch, PropagationError naming
/// (t_k, q_k) if a coefficient stops being finite.
ShiftPath solve_q_sde(const MeasureFlow& flow, const Coefficient& b0,
                      const Coefficient& sigma0, const BrownianPath& noise);

/// Assemble the aggregate-noise equilibrium from a base equilibrium:
/// solve the translation SDE, translate every marginal by its q, keep the
/// feedback unchanged. Requires base.converged, translation-invariance
/// certificates on b, sigma, f, g (CertificationError otherwise), and the
/// aggregate pair (b0, sigma0) to pass the validator's
/// Wasserstein-Lipschitz screen unless options.lipschitz_waiver is set
/// (CertificationError with the failing witness otherwise).
CNSolution lift_solution(const NCNSolution& base, const BrownianPath& noise,
                         const LiftOptions& options = {});

struct InverseLiftResult {
    ShiftPath shift;
    MeasureFlow base_flow;
};

/// Invert the construction from aggregate-noise data alone: recover
///   q_t = integral of b0(s, mu_s) ds + integral of sigma0(s, mu_s) dB_s
/// by left-point quadrature consistent with the Ito integral, then
/// translate the flow back: recovered base flow[i] =
/// shift_measure(flow[i], -q[i]). Applied to lift_solution output this
/// reproduces the shift path bitwise, because the coefficients are
/// evaluated on bitwise-identical translates.
InverseLiftResult inverse_lift(const MFGModel& model, const MeasureFlow& flow,
                               const BrownianPath& noise);

struct RoundTripReport {
    double max_W1 = 0.0;
    double q_max_err = 0.0;
};

/// lift_solution followed by inverse_lift; reports the sup-over-time
/// 1-Wasserstein distance between the recovered and original base flow and
/// the max |q - q_recovered| over nodes.
RoundTripReport round_trip_check(const NCNSolution& base,
                                 const BrownianPath& noise,
                                 const LiftOptions& options = {});

} // namespace mfglift
