#include "mfglift/assumptions.hpp"

#include <cmath>
#include <sstream>

#include "mfglift/errors.hpp"
#include "mfglift/rng.hpp"

namespace mfglift {

namespace {

double abs_moment(const GridMeasure& mu, double p) {
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        acc += std::pow(std::abs(mu.node(j)), p) * mu.density[j];
    }
    return acc * mu.dx;
}

struct Extremum {
    double value = 0.0;
    std::string witness;
    bool initialized = false;

    void propose_max(double v, const std::string& w) {
        if (!initialized || v > value) {
            value = v;
            witness = w;
            initialized = true;
        }
    }
    void propose_min(double v, const std::string& w) {
        if (!initialized || v < value) {
            value = v;
            witness = w;
            initialized = true;
        }
    }
};

std::string point_witness(double t, double x, double a, const GridMeasure& mu) {
    std::ostringstream s;
    s << "t=" << t << " x=" << x << " a=" << a << " mean(mu)=" << mean(mu);
    return s.str();
}

} // namespace

const ConditionReport* AssumptionReport::find(const std::string& name) const {
    for (const ConditionReport& c : conditions) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

AssumptionReport validate_existence_assumptions(const MFGModel& model,
                                                int samples,
                                                std::uint64_t seed) {
    if (samples < 1) {
        throw InvalidArgumentError("validate_existence_assumptions: samples >= 1");
    }
    check_valid(model);
    const CoefficientSet& cs = model.coefficients;
    AssumptionReport report;

    // Initial law integrability: the p'-th absolute moment exists on a grid
    // by construction; record its value.
    {
        ConditionReport c;
        c.name = "condition2_initial_law";
        c.constant = abs_moment(model.lambda, model.p_prime);
        c.pass = std::isfinite(c.constant);
        c.witness = "p'-th absolute moment of the initial law";
        report.conditions.push_back(c);
    }

    struct Entry {
        const char* tag;
        const Coefficient* coef;
        bool has_control;
        double growth_exponent; // exponent on |a| in the growth envelope
    };
    const Entry entries[] = {
        {"b", &cs.b, true, 1.0},
        {"sigma", &cs.sigma, true, model.p_sigma > 0.0 ? model.p_sigma : 1.0},
        {"f", &cs.f, true, model.p_prime},
        {"g", &cs.g, false, 1.0},
    };

    Rng rng(seed);
    Extremum lip[4], growth[4];
    Extremum cost_growth_f, cost_growth_g, coercivity;
    Extremum shift_lip_b0, shift_lip_sigma0;

    for (int s = 0; s < samples; ++s) {
        const GridMeasure mu = sample_test_measure(rng);
        const double t = model.T * rng.uniform();
        const double a =
            model.a_min + (model.a_max - model.a_min) * rng.uniform();
        const double m = mean(mu);
        const double x = m - 4.0 + 8.0 * rng.uniform();
        const double y = m - 4.0 + 8.0 * rng.uniform();
        const double m_p = abs_moment(mu, model.p);

        for (int e = 0; e < 4; ++e) {
            const Coefficient& F = *entries[e].coef;
            const double a_used = entries[e].has_control ? a : 0.0;
            const double fx = F.eval(t, x, mu, a_used);
            const double fy = F.eval(t, y, mu, a_used);
            if (std::abs(x - y) > 1e-8) {
                lip[e].propose_max(std::abs(fx - fy) / std::abs(x - y),
                                   point_witness(t, x, a_used, mu));
            }
            const double envelope =
                1.0 + std::abs(x) + m_p +
                std::pow(std::abs(a_used), entries[e].growth_exponent);
            growth[e].propose_max(std::abs(fx) / envelope,
                                  point_witness(t, x, a_used, mu));
        }

        // Cost growth at zero control and coercivity in the control.
        const double f0 = cs.f.eval(t, x, mu, 0.0);
        const double g0 = cs.g.eval(0.0, x, mu, 0.0);
        const double cost_envelope = std::pow(1.0 + std::abs(x) + m_p, model.p);
        cost_growth_f.propose_max(std::abs(f0) / cost_envelope,
                                  point_witness(t, x, 0.0, mu));
        cost_growth_g.propose_max(std::abs(g0) / cost_envelope,
                                  point_witness(model.T, x, 0.0, mu));
        const double a_span = std::max(std::abs(model.a_min), std::abs(model.a_max));
        const double a_big = (0.25 + 0.75 * rng.uniform()) * a_span *
                             (rng.uniform() < 0.5 ? -1.0 : 1.0);
        if (std::abs(a_big) > 1e-8) {
            const double fa = cs.f.eval(t, x, mu, a_big);
            coercivity.propose_min(
                (f0 - fa) / std::pow(std::abs(a_big), model.p_prime),
                point_witness(t, x, a_big, mu));
        }

        // Measure Lipschitzness of the shift pair: independent mixtures and
        // small exact shifts of the same measure.
        const GridMeasure nu = (s % 2 == 0)
                                   ? sample_test_measure(rng)
                                   : shift_measure(mu, 0.05 + rng.uniform());
        const double wp = wasserstein(mu, nu, model.p);
        if (wp > 1e-9) {
            std::ostringstream w;
            w << "t=" << t << " mean(mu)=" << m << " mean(nu)=" << mean(nu)
              << " W_p=" << wp;
            shift_lip_b0.propose_max(
                std::abs(cs.b0.eval_tm(t, mu) - cs.b0.eval_tm(t, nu)) / wp, w.str());
            shift_lip_sigma0.propose_max(
                std::abs(cs.sigma0.eval_tm(t, mu) - cs.sigma0.eval_tm(t, nu)) / wp,
                w.str());
        }
    }

    for (int e = 0; e < 4; ++e) {
        ConditionReport c;
        c.name = std::string("condition4_lipschitz(") + entries[e].tag + ")";
        c.constant = lip[e].value;
        c.witness = lip[e].witness;
        c.pass = std::isfinite(c.constant);
        report.conditions.push_back(c);
        report.c1 = std::max(report.c1, c.constant);

        ConditionReport gr;
        gr.name = std::string("condition4_growth(") + entries[e].tag + ")";
        gr.constant = growth[e].value;
        gr.witness = growth[e].witness;
        gr.pass = std::isfinite(gr.constant);
        report.conditions.push_back(gr);
        report.c1 = std::max(report.c1, gr.constant);
    }

    {
        ConditionReport c;
        c.name = "condition5_growth(f)";
        c.constant = cost_growth_f.value;
        c.witness = cost_growth_f.witness;
        c.pass = std::isfinite(c.constant);
        report.conditions.push_back(c);
        report.c2 = std::max(report.c2, c.constant);

        ConditionReport g;
        g.name = "condition5_growth(g)";
        g.constant = cost_growth_g.value;
        g.witness = cost_growth_g.witness;
        g.pass = std::isfinite(g.constant);
        report.conditions.push_back(g);
        report.c2 = std::max(report.c2, g.constant);

        ConditionReport coer;
        coer.name = "condition5_coercivity(f)";
        coer.constant = coercivity.value;
        coer.witness = coercivity.witness;
        coer.pass = coercivity.initialized && coercivity.value > 0.0;
        report.conditions.push_back(coer);
        report.c3 = coer.constant;
    }

    {
        ConditionReport c;
        c.name = "condition6_convexity";
        const bool drift_affine = !cs.b.has_quadratic_control();
        const bool sigma_control_free = !cs.sigma.has_control_terms();
        const double f_quad = cs.f.control_quad_total();
        const bool f_concave = f_quad <= 0.0;
        c.pass = drift_affine && sigma_control_free && f_concave;
        c.constant = f_quad;
        std::ostringstream w;
        w << "drift control-affine: " << (drift_affine ? "yes" : "no")
          << "; diffusion control-free: " << (sigma_control_free ? "yes" : "no")
          << "; running cost concave in control: " << (f_concave ? "yes" : "no");
        c.witness = w.str();
        report.conditions.push_back(c);
    }

    {
        ConditionReport b0c;
        b0c.name = "condition8_shift_lipschitz(b0)";
        b0c.constant = shift_lip_b0.value;
        b0c.witness = shift_lip_b0.witness;
        b0c.pass = cs.b0.structurally_lipschitz_in_measure() &&
                   std::isfinite(b0c.constant);
        report.conditions.push_back(b0c);

        ConditionReport s0c;
        s0c.name = "condition8_shift_lipschitz(sigma0)";
        s0c.constant = shift_lip_sigma0.value;
        s0c.witness = shift_lip_sigma0.witness;
        s0c.pass = cs.sigma0.structurally_lipschitz_in_measure() &&
                   std::isfinite(s0c.constant);
        report.conditions.push_back(s0c);
        report.c4 = std::max(b0c.constant, s0c.constant);
    }

    report.all_pass = true;
    for (const ConditionReport& c : report.conditions) {
        report.all_pass = report.all_pass && c.pass;
    }
    return report;
}

} // namespace mfglift
