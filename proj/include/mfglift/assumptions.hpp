#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfglift/coefficients.hpp"

namespace mfglift {

/// Result of one sampled or structural existence condition.
struct ConditionReport {
    std::string name;
    bool pass = false;
    /// Smallest constant consistent with the samples (largest observed
    /// ratio), or the decisive structural quantity.
    double constant = 0.0;
    /// Description of the sample achieving the largest ratio.
    std::string witness;
};

/// Aggregated report over all validated conditions, with the four headline
/// constants: c1 (state Lipschitz/growth), c2 (cost growth),
/// c3 (control coercivity), c4 (measure Lipschitz of the shift pair).
struct AssumptionReport {
    std::vector<ConditionReport> conditions;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    bool all_pass = false;

    const ConditionReport* find(const std::string& name) const;
};

/// Randomized sampled validation of the existence conditions: state
/// Lipschitz/growth of (b, sigma, f, g), growth and control coercivity of
/// the costs, structural control-convexity (affine drift, control-free
/// diffusion, concave-in-control running cost), and Wasserstein
/// Lipschitzness of (b0, sigma0) including shifted-measure pairs.
/// Deterministic given the seed; failures are reported, never thrown.
AssumptionReport validate_existence_assumptions(const MFGModel& model,
                                                int samples,
                                                std::uint64_t seed = 4242);

} // namespace mfglift
