#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfglift/measures.hpp"

namespace mfglift {

/// Uniform ellipticity floor required of every diffusion coefficient.
inline constexpr double sigma_floor = 1e-6;

/// Convolution kernels available to measure functionals.
/// identity: phi(z) = z; gaussian(w): normal density with width w;
/// indicator(r): 1 on [-r, r] (unnormalized window mass).
enum class KernelKind { identity, gaussian, indicator };

struct Kernel {
    KernelKind kind = KernelKind::identity;
    double param = 1.0;

    double operator()(double z) const;
};

/// Scalar post-composition functions G.
/// identity: s; tanh: tanh(s); scale(k): k*s; quad(k): k*s^2.
enum class GKind { identity, tanh_, scale, quad };

struct GFunc {
    GKind kind = GKind::identity;
    double param = 1.0;

    double operator()(double s) const;
    /// Globally Lipschitz on the whole line (quad is not).
    bool globally_lipschitz() const { return kind != GKind::quad; }
};

/// The measure-interaction catalog.
/// convolution: G(integral of phi(x - y) d mu(y)); local_density: G(d mu/dx at x);
/// mean_affine: G(mean(mu)) — not translation invariant on its own;
/// constant: c, ignoring the measure.
enum class FunctionalKind { convolution, local_density, mean_affine, constant };

struct MeasureFunctional {
    FunctionalKind kind = FunctionalKind::constant;
    Kernel phi;
    GFunc G;
    double c = 0.0;

    /// Whether this functional alone satisfies F(x+q, mu) = F(x, mu(.+q)).
    bool translation_invariant() const {
        return kind != FunctionalKind::mean_affine;
    }
};

/// Evaluate one functional at state x under measure mu. Convolutions use
/// midpoint quadrature (identity kernels reduce algebraically to
/// G(x - mean)); local_density linearly interpolates the density and must
/// be evaluated inside the grid support.
double eval_functional(const MeasureFunctional& F, double x, const GridMeasure& mu);

/// One additive term of a coefficient: value(t, x, mu, a) =
///   constant_:      coef
///   control_linear: coef * a
///   control_quad:   coef * a^2
///   state_linear:   coef * x
///   functional:     eval_functional(func, x, mu)
enum class TermKind { constant_, control_linear, control_quad, state_linear, functional };

struct Term {
    TermKind kind = TermKind::constant_;
    double coef = 0.0;
    MeasureFunctional func;

    static Term constant(double v);
    static Term control_linear(double k);
    static Term control_quad(double k);
    static Term state_linear(double k);
    static Term functional(MeasureFunctional f);
};

/// A coefficient function as a sum of catalog terms, with a translation-
/// invariance certificate that may only be set by the randomized checker.
struct Coefficient {
    std::vector<Term> terms;
    bool ti_certificate = false;

    double eval(double t, double x, const GridMeasure& mu, double a) const;

    /// Evaluation for (t, mu)-only coefficients (the common-noise pair);
    /// throws if any term depends on x or a.
    double eval_tm(double t, const GridMeasure& mu) const;

    bool has_control_terms() const;
    bool has_quadratic_control() const;
    /// No state_linear terms and no x-dependent functionals.
    bool x_free() const;
    /// Sum of control_quad coefficients (0 when absent).
    double control_quad_total() const;
    double control_linear_total() const;
    /// Every term is constant or mean_affine with a globally Lipschitz G —
    /// the structural surrogate for Lipschitz continuity in the measure.
    bool structurally_lipschitz_in_measure() const;
};

struct CoefficientSet {
    Coefficient b;
    Coefficient sigma;
    Coefficient f;
    Coefficient g;
    Coefficient b0;
    Coefficient sigma0;
};

enum class DomainTag { all_measures, lebesgue_density };

/// Full problem data.
struct MFGModel {
    CoefficientSet coefficients;
    double T = 1.0;
    double a_min = -1.0;
    double a_max = 1.0;
    GridMeasure lambda;
    double p = 1.0;
    double p_prime = 2.0;
    double p_sigma = 0.0;
    DomainTag domain_tag = DomainTag::lebesgue_density;
};

/// Throws InvalidArgumentError on violated model invariants (a_min <= a_max,
/// T > 0, exponent ordering p' > p >= max(1, p_sigma), p_sigma in [0,2]).
void check_valid(const MFGModel& model);

class Rng;

/// Random gaussian mixture on a randomized grid — the measure distribution
/// shared by the invariance checker and the assumption validator.
GridMeasure sample_test_measure(Rng& rng);

/// Configuration of the randomized invariance checker's sampling
/// distributions.
struct TISamplerConfig {
    double T = 1.0;
    double a_min = -1.0;
    double a_max = 1.0;
    std::uint64_t seed = 2024;
};

struct TIReport {
    double max_violation = 0.0;
    bool pass = false;
    std::string witness;
};

/// Sample random (t, x, a, q, mu) and compare F(t, x+q, mu, a) with
/// F(t, x, shift_measure(mu, -q), a); shift_measure(mu, -q) realizes
/// mu(. + q). Reports the largest violation; pass = (max <= tol).
TIReport check_translation_invariance(const Coefficient& F, int trials,
                                      double tol,
                                      const TISamplerConfig& cfg = {});

/// Run the checker and set the coefficient's certificate iff it passes.
TIReport certify(Coefficient& F, int trials = 100, double tol = 1e-9,
                 const TISamplerConfig& cfg = {});

/// Decompose the nearly-translation-invariant model (Q x + b, r_f x + f,
/// r_g x + g) into certified-invariant coefficients plus a modified shift
/// drift: b <- Q(x - mean) + b, f <- r_f (x - mean) + f,
/// g <- r_g (x - mean) + g, b0 <- b0 + Q * mean. Inputs must carry
/// certificates; outputs are re-certified.
MFGModel affine_decompose(const MFGModel& model, double Q, double r_f, double r_g);

/// Grid geometry shared by the PDE solvers and prepared contexts.
struct SolverGrid {
    double x_min = 0.0;
    double dx = 1.0;
    std::size_t n = 0;

    static SolverGrid from_measure(const GridMeasure& mu) {
        return SolverGrid{mu.x_min, mu.dx, mu.size()};
    }
    double node(std::size_t j) const { return x_min + static_cast<double>(j) * dx; }
    double x_max() const { return node(n - 1); }
};

/// Reusable cache of Toeplitz kernel rows phi((i-j) dx), so dense
/// convolutions cost one fused multiply-add pass instead of per-pair
/// kernel evaluations.
class ConvolutionCache {
public:
    const std::vector<double>& row(const Kernel& k, double dx, std::size_t n);

private:
    struct Entry {
        KernelKind kind;
        double param;
        double dx;
        std::size_t n;
        std::vector<double> values;
    };
    std::vector<Entry> entries_;
};

/// Coefficient evaluated at fixed (t, mu) over the measure's own grid:
/// per-node base field plus scalar control coefficients, so
/// value(x, a) = base(x) + control_lin * a + control_quad * a^2.
struct PreparedCoefficient {
    SolverGrid grid;
    std::vector<double> base;
    double control_lin = 0.0;
    double control_quad = 0.0;

    double at_node(std::size_t j, double a) const {
        return base[j] + (control_lin + control_quad * a) * a;
    }
    /// Linear interpolation of the base field at x (clamped to the grid)
    /// plus the control part.
    double at(double x, double a) const;
};

PreparedCoefficient prepare_coefficient(const Coefficient& coef, double t,
                                        const GridMeasure& mu,
                                        ConvolutionCache& cache);

} // namespace mfglift
