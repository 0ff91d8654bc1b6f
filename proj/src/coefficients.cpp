#include "mfglift/coefficients.hpp"

#include <cmath>
#include <sstream>

#include "mfglift/errors.hpp"
#include "mfglift/rng.hpp"

namespace mfglift {

double Kernel::operator()(double z) const {
    switch (kind) {
        case KernelKind::identity:
            return z;
        case KernelKind::gaussian: {
            const double w = param;
            return std::exp(-0.5 * z * z / (w * w)) / (w * std::sqrt(2.0 * M_PI));
        }
        case KernelKind::indicator:
            return std::abs(z) <= param ? 1.0 : 0.0;
    }
    throw InvalidArgumentError("Kernel: unknown kind");
}

double GFunc::operator()(double s) const {
    switch (kind) {
        case GKind::identity: return s;
        case GKind::tanh_: return std::tanh(s);
        case GKind::scale: return param * s;
        case GKind::quad: return param * s * s;
    }
    throw InvalidArgumentError("GFunc: unknown kind");
}

double eval_functional(const MeasureFunctional& F, double x, const GridMeasure& mu) {
    switch (F.kind) {
        case FunctionalKind::constant:
            return F.c;
        case FunctionalKind::mean_affine:
            return F.G(mean(mu));
        case FunctionalKind::local_density: {
            const double rel = (x - mu.x_min) / mu.dx;
            if (rel < 0.0 || rel > static_cast<double>(mu.size() - 1)) {
                throw OutOfSupportError(
                    "local_density evaluated at x = " + std::to_string(x) +
                    " outside the grid support [" + std::to_string(mu.x_min) +
                    ", " + std::to_string(mu.x_max()) + "]");
            }
            std::size_t j = static_cast<std::size_t>(rel);
            if (j >= mu.size() - 1) j = mu.size() - 2;
            const double w = rel - static_cast<double>(j);
            return F.G(mu.density[j] + w * (mu.density[j + 1] - mu.density[j]));
        }
        case FunctionalKind::convolution: {
            if (F.phi.kind == KernelKind::identity) {
                // integral of (x - y) d mu(y) = x - mean; the quadrature is
                // linear, so the reduction is exact up to the mass roundoff.
                return F.G(x - mean(mu));
            }
            double acc = 0.0;
            for (std::size_t j = 0; j < mu.size(); ++j) {
                acc += F.phi(x - mu.node(j)) * mu.density[j];
            }
            return F.G(acc * mu.dx);
        }
    }
    throw InvalidArgumentError("MeasureFunctional: unknown kind");
}

Term Term::constant(double v) {
    Term t;
    t.kind = TermKind::constant_;
    t.coef = v;
    return t;
}

Term Term::control_linear(double k) {
    Term t;
    t.kind = TermKind::control_linear;
    t.coef = k;
    return t;
}

Term Term::control_quad(double k) {
    Term t;
    t.kind = TermKind::control_quad;
    t.coef = k;
    return t;
}

Term Term::state_linear(double k) {
    Term t;
    t.kind = TermKind::state_linear;
    t.coef = k;
    return t;
}

Term Term::functional(MeasureFunctional f) {
    Term t;
    t.kind = TermKind::functional;
    t.func = f;
    return t;
}

double Coefficient::eval(double t, double x, const GridMeasure& mu, double a) const {
    (void)t; // the catalog is time-homogeneous; t kept for interface fidelity
    double acc = 0.0;
    for (const Term& term : terms) {
        switch (term.kind) {
            case TermKind::constant_: acc += term.coef; break;
            case TermKind::control_linear: acc += term.coef * a; break;
            case TermKind::control_quad: acc += term.coef * a * a; break;
            case TermKind::state_linear: acc += term.coef * x; break;
            case TermKind::functional: acc += eval_functional(term.func, x, mu); break;
        }
    }
    return acc;
}

double Coefficient::eval_tm(double t, const GridMeasure& mu) const {
    if (has_control_terms() || !x_free()) {
        throw InvalidArgumentError(
            "eval_tm: coefficient has state or control dependence");
    }
    return eval(t, 0.0, mu, 0.0);
}

bool Coefficient::has_control_terms() const {
    for (const Term& t : terms) {
        if (t.kind == TermKind::control_linear || t.kind == TermKind::control_quad) {
            return true;
        }
    }
    return false;
}

bool Coefficient::has_quadratic_control() const {
    for (const Term& t : terms) {
        if (t.kind == TermKind::control_quad) return true;
    }
    return false;
}

bool Coefficient::x_free() const {
    for (const Term& t : terms) {
        if (t.kind == TermKind::state_linear) return false;
        if (t.kind == TermKind::functional &&
            (t.func.kind == FunctionalKind::convolution ||
             t.func.kind == FunctionalKind::local_density)) {
            return false;
        }
    }
    return true;
}

double Coefficient::control_quad_total() const {
    double acc = 0.0;
    for (const Term& t : terms) {
        if (t.kind == TermKind::control_quad) acc += t.coef;
    }
    return acc;
}

double Coefficient::control_linear_total() const {
    double acc = 0.0;
    for (const Term& t : terms) {
        if (t.kind == TermKind::control_linear) acc += t.coef;
    }
    return acc;
}

bool Coefficient::structurally_lipschitz_in_measure() const {
    for (const Term& t : terms) {
        if (t.kind != TermKind::functional) continue;
        if (t.func.kind == FunctionalKind::constant) continue;
        if (t.func.kind == FunctionalKind::mean_affine &&
            t.func.G.globally_lipschitz()) {
            continue;
        }
        return false;
    }
    return true;
}

void check_valid(const MFGModel& model) {
    if (!(model.T > 0.0)) throw InvalidArgumentError("MFGModel: T must be > 0");
    if (!(model.a_min <= model.a_max)) {
        throw InvalidArgumentError("MFGModel: a_min must be <= a_max");
    }
    if (!(model.p >= 1.0) || !(model.p_prime > model.p) ||
        !(model.p >= model.p_sigma) || model.p_sigma < 0.0 || model.p_sigma > 2.0) {
        throw InvalidArgumentError(
            "MFGModel: exponents must satisfy p' > p >= max(1, p_sigma), "
            "p_sigma in [0, 2]");
    }
    if (model.lambda.size() < 2) {
        throw InvalidArgumentError("MFGModel: initial law missing");
    }
}

GridMeasure sample_test_measure(Rng& rng) {
    const double x_min = -6.0 - 2.0 * rng.uniform();
    const double dx = 0.012 + 0.02 * rng.uniform();
    const std::size_t n = 500 + static_cast<std::size_t>(rng.uniform() * 300.0);
    const int modes = 1 + static_cast<int>(rng.uniform() * 3.0);
    std::vector<double> density(n, 0.0);
    for (int m = 0; m < modes; ++m) {
        const double center = -2.0 + 4.0 * rng.uniform();
        const double var = 0.05 + rng.uniform();
        const double weight = 0.2 + rng.uniform();
        const double norm = weight / std::sqrt(2.0 * M_PI * var);
        for (std::size_t j = 0; j < n; ++j) {
            const double z = x_min + static_cast<double>(j) * dx - center;
            density[j] += norm * std::exp(-0.5 * z * z / var);
        }
    }
    double total = 0.0;
    for (double v : density) total += v;
    for (double& v : density) v /= total * dx;
    return GridMeasure(x_min, dx, std::move(density));
}

TIReport check_translation_invariance(const Coefficient& F, int trials,
                                      double tol, const TISamplerConfig& cfg) {
    if (trials < 1) {
        throw InvalidArgumentError("check_translation_invariance: trials >= 1");
    }
    Rng rng(cfg.seed);
    TIReport report;
    for (int trial = 0; trial < trials; ++trial) {
        const GridMeasure mu = sample_test_measure(rng);
        const double t = cfg.T * rng.uniform();
        const double a = cfg.a_min + (cfg.a_max - cfg.a_min) * rng.uniform();
        const double q = -2.0 + 4.0 * rng.uniform();
        // Sample the evaluation point x+q inside the support of mu so that
        // local-density functionals stay in range on both sides.
        const double span = mu.x_max() - mu.x_min;
        const double z = mu.x_min + span * (0.1 + 0.8 * rng.uniform());
        const double lhs = F.eval(t, z, mu, a);
        const double rhs = F.eval(t, z - q, shift_measure(mu, -q), a);
        const double violation = std::abs(lhs - rhs);
        if (violation > report.max_violation) {
            report.max_violation = violation;
            std::ostringstream w;
            w << "t=" << t << " x=" << (z - q) << " a=" << a << " q=" << q
              << " mu~mixture(mean=" << mean(mu) << ", sd=" << std::sqrt(variance(mu))
              << ")";
            report.witness = w.str();
        }
    }
    report.pass = report.max_violation <= tol;
    return report;
}

TIReport certify(Coefficient& F, int trials, double tol, const TISamplerConfig& cfg) {
    const TIReport report = check_translation_invariance(F, trials, tol, cfg);
    F.ti_certificate = report.pass;
    return report;
}

MFGModel affine_decompose(const MFGModel& model, double Q, double r_f, double r_g) {
    const CoefficientSet& cs = model.coefficients;
    if (!cs.b.ti_certificate || !cs.sigma.ti_certificate ||
        !cs.f.ti_certificate || !cs.g.ti_certificate) {
        throw CertificationError(
            "affine_decompose: base coefficients must carry invariance "
            "certificates");
    }
    MFGModel out = model;
    auto add_centered_state = [](Coefficient& coef, double k) {
        if (k == 0.0) return;
        coef.terms.push_back(Term::state_linear(k));
        MeasureFunctional neg_mean;
        neg_mean.kind = FunctionalKind::mean_affine;
        neg_mean.G = GFunc{GKind::scale, -k};
        coef.terms.push_back(Term::functional(neg_mean));
    };
    add_centered_state(out.coefficients.b, Q);
    add_centered_state(out.coefficients.f, r_f);
    add_centered_state(out.coefficients.g, r_g);
    if (Q != 0.0) {
        MeasureFunctional q_mean;
        q_mean.kind = FunctionalKind::mean_affine;
        q_mean.G = GFunc{GKind::scale, Q};
        out.coefficients.b0.terms.push_back(Term::functional(q_mean));
    }

    TISamplerConfig cfg;
    cfg.T = model.T;
    cfg.a_min = model.a_min;
    cfg.a_max = model.a_max;
    for (Coefficient* coef : {&out.coefficients.b, &out.coefficients.sigma,
                              &out.coefficients.f, &out.coefficients.g}) {
        const TIReport rep = certify(*coef, 100, 1e-9, cfg);
        if (!rep.pass) {
            throw CertificationError(
                "affine_decompose: transformed coefficient failed certification; "
                "witness " + rep.witness);
        }
    }
    return out;
}

const std::vector<double>& ConvolutionCache::row(const Kernel& k, double dx,
                                                 std::size_t n) {
    for (const Entry& e : entries_) {
        if (e.kind == k.kind && e.param == k.param && e.dx == dx && e.n == n) {
            return e.values;
        }
    }
    Entry e;
    e.kind = k.kind;
    e.param = k.param;
    e.dx = dx;
    e.n = n;
    e.values.resize(2 * n - 1);
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n) - 1;
    for (std::ptrdiff_t d = -m; d <= m; ++d) {
        e.values[static_cast<std::size_t>(d + m)] = k(static_cast<double>(d) * dx);
    }
    entries_.push_back(std::move(e));
    return entries_.back().values;
}

double PreparedCoefficient::at(double x, double a) const {
    const double top = static_cast<double>(grid.n - 1);
    double rel = (x - grid.x_min) / grid.dx;
    if (rel < 0.0) rel = 0.0;
    if (rel > top) rel = top;
    std::size_t j = static_cast<std::size_t>(rel);
    if (j >= grid.n - 1) j = grid.n - 2;
    const double w = rel - static_cast<double>(j);
    const double b = base[j] + w * (base[j + 1] - base[j]);
    return b + (control_lin + control_quad * a) * a;
}

PreparedCoefficient prepare_coefficient(const Coefficient& coef, double t,
                                        const GridMeasure& mu,
                                        ConvolutionCache& cache) {
    (void)t;
    PreparedCoefficient out;
    out.grid = SolverGrid::from_measure(mu);
    const std::size_t n = out.grid.n;
    out.base.assign(n, 0.0);

    for (const Term& term : coef.terms) {
        switch (term.kind) {
            case TermKind::constant_:
                for (double& v : out.base) v += term.coef;
                break;
            case TermKind::control_linear:
                out.control_lin += term.coef;
                break;
            case TermKind::control_quad:
                out.control_quad += term.coef;
                break;
            case TermKind::state_linear:
                for (std::size_t j = 0; j < n; ++j) {
                    out.base[j] += term.coef * out.grid.node(j);
                }
                break;
            case TermKind::functional: {
                const MeasureFunctional& F = term.func;
                if (F.kind == FunctionalKind::constant) {
                    for (double& v : out.base) v += F.c;
                } else if (F.kind == FunctionalKind::mean_affine) {
                    const double v = F.G(mean(mu));
                    for (double& b : out.base) b += v;
                } else if (F.kind == FunctionalKind::local_density) {
                    for (std::size_t j = 0; j < n; ++j) {
                        out.base[j] += F.G(mu.density[j]);
                    }
                } else if (F.phi.kind == KernelKind::identity) {
                    const double m = mean(mu);
                    for (std::size_t j = 0; j < n; ++j) {
                        out.base[j] += F.G(out.grid.node(j) - m);
                    }
                } else {
                    const std::vector<double>& row = cache.row(F.phi, mu.dx, n);
                    const double* centered = row.data() + (n - 1);
                    for (std::size_t j = 0; j < n; ++j) {
                        const double* r = centered + j;
                        double acc = 0.0;
                        for (std::size_t k = 0; k < n; ++k) {
                            acc += r[-static_cast<std::ptrdiff_t>(k)] * mu.density[k];
                        }
                        out.base[j] += F.G(acc * mu.dx);
                    }
                }
                break;
            }
        }
    }
    return out;
}

} // namespace mfglift
