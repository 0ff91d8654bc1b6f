#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mfglift {

/// Probability measure on a uniform 1D grid, stored as density values at the
/// nodes. Node j sits at x_min + j*dx and carries mass density[j]*dx spread
/// uniformly over the cell [node - dx/2, node + dx/2].
struct GridMeasure {
    double x_min = 0.0;
    double dx = 1.0;
    std::vector<double> density;

    GridMeasure() = default;

    /// Validating constructor: density >= 0, dx * sum(density) = 1 within
    /// 1e-10, at least two nodes.
    GridMeasure(double x_min_, double dx_, std::vector<double> density_);

    std::size_t size() const { return density.size(); }
    double node(std::size_t j) const { return x_min + static_cast<double>(j) * dx; }
    double x_max() const { return node(size() - 1); }
};

/// Weighted particle cloud. Empty weights mean uniform 1/N.
struct EmpiricalMeasure {
    std::vector<double> particles;
    std::vector<double> weights;

    EmpiricalMeasure() = default;

    /// Validating constructor: at least one particle; weights (if given)
    /// nonnegative, one per particle, summing to 1 within 1e-12.
    explicit EmpiricalMeasure(std::vector<double> particles_,
                              std::vector<double> weights_ = {});
};

/// Time-indexed family of grid measures: times strictly increasing starting
/// at 0, one measure per time node.
struct MeasureFlow {
    std::vector<double> times;
    std::vector<GridMeasure> measures;

    double horizon() const { return times.empty() ? 0.0 : times.back(); }
    double dt() const;
};

/// Throws InvalidArgumentError unless the flow satisfies its invariants.
void check_valid(const MeasureFlow& flow);

/// Translate a measure by q. The shift is stored by re-anchoring the grid
/// (x_min + q) with the density array untouched — lossless, never resampled.
GridMeasure shift_measure(const GridMeasure& mu, double q);

/// k-th raw moment, k >= 0, by midpoint quadrature / weighted sum.
double moment(const GridMeasure& mu, int k);
double moment(const EmpiricalMeasure& mu, int k);

double mean(const GridMeasure& mu);
double mean(const EmpiricalMeasure& mu);
double variance(const GridMeasure& mu);
double variance(const EmpiricalMeasure& mu);

/// Piecewise-linear quantile function. Segment k maps [u[k], u[k+1]] linearly
/// from x_lo[k] to x_hi[k]; u is strictly increasing from 0 to exactly 1
/// (zero-mass cells are dropped), and x may jump between segments.
class QuantileFunction {
public:
    static QuantileFunction from_grid(const GridMeasure& mu);
    static QuantileFunction from_empirical(const EmpiricalMeasure& mu);

    /// Evaluate at u in [0,1] (clamped); right-continuous at jumps.
    double operator()(double u) const;

    std::size_t segment_count() const { return x_lo_.size(); }
    const std::vector<double>& breakpoints() const { return u_; }

    /// Exact integral over [0,1] of |Q_a(u) - Q_b(u)|^p for two quantile
    /// functions, by merging their breakpoints; each merged interval is a
    /// linear difference integrated in closed form.
    static double coupling_integral(const QuantileFunction& a,
                                    const QuantileFunction& b, double p);

private:
    std::vector<double> u_;    // size m+1
    std::vector<double> x_lo_; // size m
    std::vector<double> x_hi_; // size m
};

/// Exact p-Wasserstein distance via inverse-CDF coupling,
/// (integral of |F^{-1}(u) - G^{-1}(u)|^p du)^{1/p}. Errors if p < 1.
double wasserstein(const GridMeasure& a, const GridMeasure& b, double p);
double wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p);
double wasserstein(const EmpiricalMeasure& a, const GridMeasure& b, double p);

/// Histogram binning onto node-centred cells covering
/// [x_min - dx/2, x_min + (n - 1/2) dx). Mass escaping the window may not
/// exceed 1e-3 (DomainTooSmallError reports it); the kept mass is
/// renormalized so the result is a probability measure.
GridMeasure particles_to_grid(const EmpiricalMeasure& mu, double x_min,
                              double dx, std::size_t n);

/// Normal density N(mean, variance) sampled at the grid nodes and
/// normalized to unit mass.
GridMeasure gaussian_grid(double mean, double variance, double x_min,
                          double dx, std::size_t n);

/// CSV serialization, header `t,x,density`, row-major by time then node,
/// 17-significant-digit floats, LF line endings.
void write_flow_csv(const MeasureFlow& flow, const std::string& path);
MeasureFlow read_flow_csv(const std::string& path);

} // namespace mfglift
