#include "mfglift/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mfglift/errors.hpp"

namespace mfglift {

namespace {

constexpr double k_mass_tol = 1e-10;
constexpr double k_weight_tol = 1e-12;

} // namespace

GridMeasure::GridMeasure(double x_min_, double dx_, std::vector<double> density_)
    : x_min(x_min_), dx(dx_), density(std::move(density_)) {
    if (!(dx > 0.0) || !std::isfinite(dx) || !std::isfinite(x_min)) {
        throw InvalidArgumentError("GridMeasure: dx must be positive and finite");
    }
    if (density.size() < 2) {
        throw InvalidArgumentError("GridMeasure: need at least 2 grid nodes");
    }
    double total = 0.0;
    for (double v : density) {
        if (!(v >= 0.0)) {
            throw InvalidArgumentError("GridMeasure: density values must be >= 0");
        }
        total += v;
    }
    if (std::abs(total * dx - 1.0) > k_mass_tol) {
        throw InvalidArgumentError("GridMeasure: total mass " +
                                   std::to_string(total * dx) +
                                   " deviates from 1 by more than 1e-10");
    }
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> particles_,
                                   std::vector<double> weights_)
    : particles(std::move(particles_)), weights(std::move(weights_)) {
    if (particles.empty()) {
        throw InvalidArgumentError("EmpiricalMeasure: need at least one particle");
    }
    if (!weights.empty()) {
        if (weights.size() != particles.size()) {
            throw InvalidArgumentError("EmpiricalMeasure: one weight per particle");
        }
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) {
                throw InvalidArgumentError("EmpiricalMeasure: weights must be >= 0");
            }
            total += w;
        }
        if (std::abs(total - 1.0) > k_weight_tol) {
            throw InvalidArgumentError("EmpiricalMeasure: weights sum to " +
                                       std::to_string(total) + ", not 1");
        }
    }
}

double MeasureFlow::dt() const {
    if (times.size() < 2) {
        throw InvalidArgumentError("MeasureFlow: need at least two time nodes");
    }
    return times[1] - times[0];
}

void check_valid(const MeasureFlow& flow) {
    if (flow.times.empty() || flow.times.size() != flow.measures.size()) {
        throw InvalidArgumentError("MeasureFlow: one measure per time node required");
    }
    if (flow.times.front() != 0.0) {
        throw InvalidArgumentError("MeasureFlow: first time must be 0");
    }
    for (std::size_t i = 1; i < flow.times.size(); ++i) {
        if (!(flow.times[i] > flow.times[i - 1])) {
            throw InvalidArgumentError("MeasureFlow: times must be strictly increasing");
        }
    }
}

GridMeasure shift_measure(const GridMeasure& mu, double q) {
    GridMeasure out = mu;
    out.x_min = mu.x_min + q;
    return out;
}

double moment(const GridMeasure& mu, int k) {
    if (k < 0) throw InvalidArgumentError("moment: order must be >= 0");
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        acc += std::pow(mu.node(j), k) * mu.density[j];
    }
    return acc * mu.dx;
}

double moment(const EmpiricalMeasure& mu, int k) {
    if (k < 0) throw InvalidArgumentError("moment: order must be >= 0");
    const std::size_t n = mu.particles.size();
    double acc = 0.0;
    if (mu.weights.empty()) {
        for (double x : mu.particles) acc += std::pow(x, k);
        return acc / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        acc += mu.weights[i] * std::pow(mu.particles[i], k);
    }
    return acc;
}

double mean(const GridMeasure& mu) { return moment(mu, 1); }
double mean(const EmpiricalMeasure& mu) { return moment(mu, 1); }

double variance(const GridMeasure& mu) {
    const double m = mean(mu);
    return moment(mu, 2) - m * m;
}

double variance(const EmpiricalMeasure& mu) {
    const double m = mean(mu);
    return moment(mu, 2) - m * m;
}

QuantileFunction QuantileFunction::from_grid(const GridMeasure& mu) {
    const std::size_t n = mu.size();
    double total = 0.0;
    for (double v : mu.density) total += v;
    // total > 0 is guaranteed by the mass invariant.

    QuantileFunction qf;
    qf.u_.reserve(n + 1);
    qf.x_lo_.reserve(n);
    qf.x_hi_.reserve(n);
    qf.u_.push_back(0.0);
    double running = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (mu.density[j] <= 0.0) continue;
        running += mu.density[j];
        const double x_node = mu.node(j);
        qf.x_lo_.push_back(x_node - 0.5 * mu.dx);
        qf.x_hi_.push_back(x_node + 0.5 * mu.dx);
        qf.u_.push_back(running / total);
    }
    qf.u_.back() = 1.0;
    if (qf.x_lo_.empty()) {
        throw InvalidArgumentError("QuantileFunction: measure has no mass");
    }
    return qf;
}

QuantileFunction QuantileFunction::from_empirical(const EmpiricalMeasure& mu) {
    const std::size_t n = mu.particles.size();
    QuantileFunction qf;
    if (mu.weights.empty()) {
        std::vector<double> sorted = mu.particles;
        std::sort(sorted.begin(), sorted.end());
        qf.u_.reserve(n + 1);
        qf.x_lo_.reserve(n);
        qf.x_hi_.reserve(n);
        qf.u_.push_back(0.0);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            qf.x_lo_.push_back(sorted[i]);
            qf.x_hi_.push_back(sorted[i]);
            qf.u_.push_back(static_cast<double>(i + 1) * inv_n);
        }
        qf.u_.back() = 1.0;
        return qf;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return mu.particles[a] < mu.particles[b];
    });
    double total = 0.0;
    for (double w : mu.weights) total += w;
    qf.u_.push_back(0.0);
    double running = 0.0;
    for (std::size_t i : order) {
        if (mu.weights[i] <= 0.0) continue;
        running += mu.weights[i];
        qf.x_lo_.push_back(mu.particles[i]);
        qf.x_hi_.push_back(mu.particles[i]);
        qf.u_.push_back(running / total);
    }
    if (qf.x_lo_.empty()) {
        throw InvalidArgumentError("QuantileFunction: measure has no mass");
    }
    qf.u_.back() = 1.0;
    return qf;
}

double QuantileFunction::operator()(double u) const {
    if (u <= 0.0) return x_lo_.front();
    if (u >= 1.0) return x_hi_.back();
    const auto it = std::upper_bound(u_.begin(), u_.end(), u);
    std::size_t k = static_cast<std::size_t>(it - u_.begin());
    if (k == 0) k = 1;
    if (k > x_lo_.size()) k = x_lo_.size();
    const std::size_t seg = k - 1;
    const double span = u_[k] - u_[seg];
    const double s = (u - u_[seg]) / span;
    return x_lo_[seg] + s * (x_hi_[seg] - x_lo_[seg]);
}

namespace {

/// h * integral over s in [0,1] of |d0 + s (d1 - d0)|^p, the contribution of
/// one merged interval where the difference of two quantile functions is
/// linear. Sign changes are split at the root (exact for every p); the
/// same-sign case uses cancellation-free closed forms for p = 1, 2 and a
/// hybrid primitive-difference / Gauss rule otherwise.
double linear_difference_integral(double d0, double d1, double h, double p) {
    if (d0 == 0.0 && d1 == 0.0) return 0.0;
    const double a0 = std::abs(d0);
    const double a1 = std::abs(d1);
    if ((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0)) {
        const double s_star = a0 / (a0 + a1);
        return h * (std::pow(a0, p) * s_star + std::pow(a1, p) * (1.0 - s_star)) /
               (p + 1.0);
    }
    if (p == 1.0) return 0.5 * h * (a0 + a1);
    if (p == 2.0) return h * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
    const double slope = a1 - a0;
    const double scale = std::max(a0, a1);
    if (std::abs(slope) <= 1e-4 * scale) {
        // Near-constant difference: the primitive-difference quotient would
        // cancel catastrophically; 2-point Gauss is exact to O((slope/scale)^4).
        const double offset = 0.5 / std::sqrt(3.0);
        const double lo = a0 + (0.5 - offset) * slope;
        const double hi = a0 + (0.5 + offset) * slope;
        return 0.5 * h * (std::pow(lo, p) + std::pow(hi, p));
    }
    const double prim_hi = std::pow(a1, p + 1.0) / (p + 1.0);
    const double prim_lo = std::pow(a0, p + 1.0) / (p + 1.0);
    return h * (prim_hi - prim_lo) / slope;
}

} // namespace

double QuantileFunction::coupling_integral(const QuantileFunction& a,
                                           const QuantileFunction& b, double p) {
    const std::size_t ma = a.x_lo_.size();
    const std::size_t mb = b.x_lo_.size();
    std::size_t i = 0, j = 0;
    double u_cur = 0.0;
    double total = 0.0;
    while (i < ma && j < mb) {
        const double ua = a.u_[i + 1];
        const double ub = b.u_[j + 1];
        const double u_next = std::min(ua, ub);
        if (u_next > u_cur) {
            const double sa = (a.x_hi_[i] - a.x_lo_[i]) / (a.u_[i + 1] - a.u_[i]);
            const double sb = (b.x_hi_[j] - b.x_lo_[j]) / (b.u_[j + 1] - b.u_[j]);
            const double ax0 = a.x_lo_[i] + (u_cur - a.u_[i]) * sa;
            const double ax1 = a.x_lo_[i] + (u_next - a.u_[i]) * sa;
            const double bx0 = b.x_lo_[j] + (u_cur - b.u_[j]) * sb;
            const double bx1 = b.x_lo_[j] + (u_next - b.u_[j]) * sb;
            total += linear_difference_integral(ax0 - bx0, ax1 - bx1,
                                                u_next - u_cur, p);
            u_cur = u_next;
        }
        if (ua <= u_next) ++i;
        if (ub <= u_next) ++j;
    }
    return total;
}

namespace {

double wasserstein_qf(const QuantileFunction& a, const QuantileFunction& b,
                      double p) {
    if (!(p >= 1.0)) {
        throw InvalidArgumentError("wasserstein: p must be >= 1");
    }
    const double integral = QuantileFunction::coupling_integral(a, b, p);
    return std::pow(integral, 1.0 / p);
}

} // namespace

double wasserstein(const GridMeasure& a, const GridMeasure& b, double p) {
    return wasserstein_qf(QuantileFunction::from_grid(a),
                          QuantileFunction::from_grid(b), p);
}

double wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
    return wasserstein_qf(QuantileFunction::from_empirical(a),
                          QuantileFunction::from_empirical(b), p);
}

double wasserstein(const EmpiricalMeasure& a, const GridMeasure& b, double p) {
    return wasserstein_qf(QuantileFunction::from_empirical(a),
                          QuantileFunction::from_grid(b), p);
}

GridMeasure particles_to_grid(const EmpiricalMeasure& mu, double x_min,
                              double dx, std::size_t n) {
    if (n < 2) throw InvalidArgumentError("particles_to_grid: need n >= 2");
    if (!(dx > 0.0)) throw InvalidArgumentError("particles_to_grid: dx must be > 0");
    std::vector<double> bin_mass(n, 0.0);
    double escaped = 0.0;
    const double w_uniform = 1.0 / static_cast<double>(mu.particles.size());
    for (std::size_t i = 0; i < mu.particles.size(); ++i) {
        const double w = mu.weights.empty() ? w_uniform : mu.weights[i];
        const double rel = (mu.particles[i] - x_min) / dx + 0.5;
        if (rel < 0.0 || rel >= static_cast<double>(n)) {
            escaped += w;
            continue;
        }
        bin_mass[static_cast<std::size_t>(rel)] += w;
    }
    if (escaped > 1e-3) {
        throw DomainTooSmallError(
            "particles_to_grid: " + std::to_string(escaped) +
            " of the particle mass lies outside the grid window");
    }
    const double kept = 1.0 - escaped;
    for (double& m : bin_mass) m /= (dx * kept);
    return GridMeasure(x_min, dx, std::move(bin_mass));
}

GridMeasure gaussian_grid(double mean_, double variance_, double x_min,
                          double dx, std::size_t n) {
    if (!(variance_ > 0.0)) {
        throw InvalidArgumentError("gaussian_grid: variance must be > 0");
    }
    std::vector<double> density(n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double z = x_min + static_cast<double>(j) * dx - mean_;
        density[j] = std::exp(-0.5 * z * z / variance_);
        total += density[j];
    }
    const double norm = 1.0 / (total * dx);
    for (double& v : density) v *= norm;
    return GridMeasure(x_min, dx, std::move(density));
}

void write_flow_csv(const MeasureFlow& flow, const std::string& path) {
    check_valid(flow);
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("write_flow_csv: cannot open " + path);
    std::fputs("t,x,density\n", f);
    for (std::size_t k = 0; k < flow.times.size(); ++k) {
        const GridMeasure& mu = flow.measures[k];
        for (std::size_t j = 0; j < mu.size(); ++j) {
            std::fprintf(f, "%.17g,%.17g,%.17g\n", flow.times[k], mu.node(j),
                         mu.density[j]);
        }
    }
    std::fclose(f);
}

MeasureFlow read_flow_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("read_flow_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,x,density", 0) != 0) {
        throw ParseError("read_flow_csv: missing `t,x,density` header in " + path);
    }
    MeasureFlow flow;
    std::vector<double> xs, ds;
    bool have_time = false;
    double t_cur = 0.0;
    std::size_t line_no = 1;
    auto emit = [&]() {
        if (xs.empty()) return;
        if (xs.size() < 2) {
            throw ParseError("read_flow_csv: time block with fewer than 2 nodes");
        }
        const double dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
        flow.times.push_back(t_cur);
        flow.measures.emplace_back(xs.front(), dx, ds);
        xs.clear();
        ds.clear();
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double t, x, d;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &t, &x, &d) != 3) {
            throw ParseError("read_flow_csv: bad row at line " +
                             std::to_string(line_no) + " of " + path);
        }
        if (!have_time || t != t_cur) {
            emit();
            t_cur = t;
            have_time = true;
        }
        xs.push_back(x);
        ds.push_back(d);
    }
    emit();
    check_valid(flow);
    return flow;
}

} // namespace mfglift
