#include "mfglift/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "mfglift/errors.hpp"
#include "mfglift/rng.hpp"
#include "oracles.hpp"

using namespace mfglift;

namespace {

GridMeasure random_mixture(Rng& rng) {
    const double x_min = -6.0 - 2.0 * rng.uniform();
    const double dx = 0.01 + 0.02 * rng.uniform();
    const std::size_t n = 600 + static_cast<std::size_t>(rng.uniform() * 200);
    const int modes = 1 + static_cast<int>(rng.uniform() * 3.0);
    std::vector<double> density(n, 0.0);
    for (int m = 0; m < modes; ++m) {
        const double mu = -2.0 + 4.0 * rng.uniform();
        const double var = 0.05 + rng.uniform();
        const double w = 0.2 + rng.uniform();
        for (std::size_t j = 0; j < n; ++j) {
            const double x = x_min + static_cast<double>(j) * dx;
            density[j] += w * oracles::normal_density(x, mu, var);
        }
    }
    double total = 0.0;
    for (double v : density) total += v;
    for (double& v : density) v /= total * dx;
    return GridMeasure(x_min, dx, std::move(density));
}

} // namespace

TEST_CASE("GridMeasure construction enforces invariants") {
    CHECK_NOTHROW(GridMeasure(0.0, 0.5, {1.0, 1.0}));
    CHECK_THROWS_AS(GridMeasure(0.0, 0.5, {1.0}), InvalidArgumentError);
    CHECK_THROWS_AS(GridMeasure(0.0, -0.5, {1.0, 1.0}), InvalidArgumentError);
    CHECK_THROWS_AS(GridMeasure(0.0, 0.5, {1.0, -1.0}), InvalidArgumentError);
    CHECK_THROWS_AS(GridMeasure(0.0, 0.5, {1.0, 0.9}), InvalidArgumentError);
}

TEST_CASE("EmpiricalMeasure construction enforces invariants") {
    CHECK_NOTHROW(EmpiricalMeasure({1.0, 2.0}));
    CHECK_NOTHROW(EmpiricalMeasure({1.0, 2.0}, {0.25, 0.75}));
    CHECK_THROWS_AS(EmpiricalMeasure(std::vector<double>{}), InvalidArgumentError);
    CHECK_THROWS_AS(EmpiricalMeasure({1.0, 2.0}, {0.5}), InvalidArgumentError);
    CHECK_THROWS_AS(EmpiricalMeasure({1.0, 2.0}, {0.7, 0.7}), InvalidArgumentError);
    CHECK_THROWS_AS(EmpiricalMeasure({1.0, 2.0}, {-0.5, 1.5}), InvalidArgumentError);
}

TEST_CASE("shift_measure re-anchors losslessly") {
    const GridMeasure mu = gaussian_grid(0.0, 1.0, -8.0, 0.01, 1601);

    const GridMeasure same = shift_measure(mu, 0.0);
    CHECK(same.x_min == mu.x_min);
    CHECK(same.density == mu.density);

    const GridMeasure moved = shift_measure(mu, 2.0);
    CHECK(moved.density == mu.density);
    CHECK(mean(moved) == doctest::Approx(mean(mu) + 2.0).epsilon(1e-14));

    const GridMeasure back = shift_measure(moved, -2.0);
    CHECK(back.x_min == mu.x_min);
    CHECK(back.density == mu.density);

    CHECK(wasserstein(mu, shift_measure(mu, 1.5), 1.0) ==
          doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("translation equality: W_p between shifts is |q - q'|") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const GridMeasure mu = random_mixture(rng);
        const double q = -3.0 + 6.0 * rng.uniform();
        const double qp = -3.0 + 6.0 * rng.uniform();
        for (double p : {1.0, 2.0, 1.7}) {
            const double w = wasserstein(shift_measure(mu, q),
                                         shift_measure(mu, qp), p);
            CHECK(std::abs(w - std::abs(q - qp)) < 1e-12);
        }
    }
}

TEST_CASE("wasserstein basics: identity, point masses, p validation") {
    const GridMeasure mu = gaussian_grid(0.3, 0.7, -8.0, 0.02, 801);
    CHECK(wasserstein(mu, mu, 1.0) == 0.0);
    CHECK(wasserstein(mu, mu, 2.0) == 0.0);

    const EmpiricalMeasure a({0.0});
    const EmpiricalMeasure b({3.0});
    for (double p : {1.0, 2.0, 3.0, 7.5}) {
        CHECK(wasserstein(a, b, p) == doctest::Approx(3.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(wasserstein(a, b, 0.5), InvalidArgumentError);
}

TEST_CASE("wasserstein against quantile-sampling oracle") {
    const GridMeasure a = gaussian_grid(0.0, 1.0, -8.0, 0.01, 1601);
    const GridMeasure b = gaussian_grid(2.0, 1.0, -6.0, 0.01, 1601);

    // Equal shapes shifted by 2: the exact distance is 2 for every p.
    CHECK(wasserstein(a, b, 1.0) == doctest::Approx(2.0).epsilon(1e-8));

    // Independent Riemann estimate on 1e6 quantile samples.
    const QuantileFunction qa = QuantileFunction::from_grid(a);
    const QuantileFunction qb = QuantileFunction::from_grid(b);
    const double ref = oracles::quantile_sampling_distance(
        [&](double u) { return qa(u); }, [&](double u) { return qb(u); }, 1.0,
        1000000);
    CHECK(wasserstein(a, b, 1.0) == doctest::Approx(ref).epsilon(1e-4));

    // Different variances: W2 between N(0,1) and N(0,4) is |1 - 2| = 1.
    const GridMeasure c = gaussian_grid(0.0, 4.0, -16.0, 0.01, 3201);
    CHECK(wasserstein(a, c, 2.0) == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("wasserstein is a metric on fixed-grid measures") {
    Rng rng(23);
    for (int trial = 0; trial < 12; ++trial) {
        const GridMeasure base = random_mixture(rng);
        GridMeasure a = base, b = base, c = base;
        // Perturb the three densities with different smooth bumps.
        auto perturb = [&](GridMeasure& m, double center, double amp) {
            for (std::size_t j = 0; j < m.size(); ++j) {
                m.density[j] += amp * oracles::normal_density(m.node(j), center, 0.3);
            }
            double total = 0.0;
            for (double v : m.density) total += v;
            for (double& v : m.density) v /= total * m.dx;
        };
        perturb(a, -1.0, 0.1);
        perturb(b, 0.5, 0.2);
        perturb(c, 1.5, 0.15);
        for (double p : {1.0, 2.0}) {
            const double ab = wasserstein(a, b, p);
            const double ba = wasserstein(b, a, p);
            const double bc = wasserstein(b, c, p);
            const double ac = wasserstein(a, c, p);
            CHECK(ab == ba);
            CHECK(ac <= ab + bc + 1e-12);
            CHECK(ab >= 0.0);
        }
    }
}

TEST_CASE("moments by quadrature and by weighted sum") {
    const EmpiricalMeasure point({5.0});
    CHECK(moment(point, 1) == 5.0);
    CHECK(moment(point, 2) == 25.0);

    const GridMeasure sym = gaussian_grid(0.0, 1.0, -8.0, 0.01, 1601);
    CHECK(std::abs(moment(sym, 1)) < 1e-10);
    CHECK(moment(sym, 2) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(variance(sym) == doctest::Approx(1.0).epsilon(1e-8));

    const EmpiricalMeasure weighted({1.0, 3.0}, {0.75, 0.25});
    CHECK(mean(weighted) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(moment(weighted, 2) == doctest::Approx(0.75 + 0.25 * 9.0).epsilon(1e-15));

    CHECK(mean(shift_measure(sym, 2.5)) ==
          doctest::Approx(moment(sym, 1) + 2.5).epsilon(1e-13));
}

TEST_CASE("particles_to_grid bins mass exactly") {
    // One particle at a bin center.
    const GridMeasure one = particles_to_grid(EmpiricalMeasure({0.5}), 0.0, 0.25, 5);
    CHECK(one.density[2] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(one.density[0] == 0.0);
    CHECK(one.density[4] == 0.0);

    // Two bin centers with weight 1/2 each.
    const GridMeasure two =
        particles_to_grid(EmpiricalMeasure({0.25, 0.75}), 0.0, 0.25, 5);
    CHECK(two.density[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(two.density[3] == doctest::Approx(2.0).epsilon(1e-14));

    CHECK_THROWS_AS(particles_to_grid(EmpiricalMeasure({100.0}), 0.0, 0.25, 5),
                    DomainTooSmallError);
}

TEST_CASE("particles_to_grid converges to the sampled law") {
    // 1e5 standard-normal particles against the analytic grid, repeated over
    // 20 seeds; the 95th percentile of W1 must stay below 0.02.
    const GridMeasure target = gaussian_grid(0.0, 1.0, -8.0, 0.05, 321);
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(derive_seed(900, seed));
        std::vector<double> particles(100000);
        for (double& x : particles) x = rng.normal();
        const GridMeasure binned =
            particles_to_grid(EmpiricalMeasure(std::move(particles)), -8.0, 0.05, 321);
        errs.push_back(wasserstein(binned, target, 1.0));
    }
    std::sort(errs.begin(), errs.end());
    CHECK(errs[18] < 0.02);
}

TEST_CASE("quantile functions interpolate the CDF") {
    const GridMeasure mu = gaussian_grid(0.0, 1.0, -8.0, 0.01, 1601);
    const QuantileFunction qf = QuantileFunction::from_grid(mu);
    CHECK(qf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-3));
    CHECK(qf(0.5) == doctest::Approx(0.0).epsilon(1e-6));

    // Monotone.
    double prev = qf(0.001);
    for (int k = 1; k <= 100; ++k) {
        const double cur = qf(0.001 + 0.998 * k / 100.0);
        CHECK(cur >= prev);
        prev = cur;
    }

    // Empirical quantile is the sorted step function.
    const EmpiricalMeasure emp({3.0, 1.0, 2.0});
    const QuantileFunction qe = QuantileFunction::from_empirical(emp);
    CHECK(qe(0.1) == 1.0);
    CHECK(qe(0.5) == 2.0);
    CHECK(qe(0.9) == 3.0);
}

TEST_CASE("equal-size uniform clouds reduce to sorted matching") {
    Rng rng(31);
    std::vector<double> xs(500), ys(500);
    for (double& v : xs) v = rng.normal();
    for (double& v : ys) v = 0.4 + 1.3 * rng.normal();
    const EmpiricalMeasure ex(xs);
    const EmpiricalMeasure ey(ys);

    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    for (double p : {1.0, 2.0}) {
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            acc += std::pow(std::abs(xs[i] - ys[i]), p);
        }
        const double sorted_match = std::pow(acc / xs.size(), 1.0 / p);
        CHECK(wasserstein(ex, ey, p) == doctest::Approx(sorted_match).epsilon(1e-12));
    }
}

TEST_CASE("zero-density gaps produce quantile jumps, not failures") {
    std::vector<double> density(200, 0.0);
    for (std::size_t j = 0; j < 50; ++j) density[j] = 1.0;
    for (std::size_t j = 150; j < 200; ++j) density[j] = 1.0;
    double total = 0.0;
    for (double v : density) total += v;
    const double dx = 0.01;
    for (double& v : density) v /= total * dx;
    const GridMeasure mu(0.0, dx, std::move(density));

    CHECK(wasserstein(mu, mu, 1.0) == 0.0);
    CHECK(wasserstein(mu, shift_measure(mu, 0.7), 1.0) ==
          doctest::Approx(0.7).epsilon(1e-12));
    const QuantileFunction qf = QuantileFunction::from_grid(mu);
    CHECK(qf(0.49) < 0.6);
    CHECK(qf(0.51) > 1.4);
}

TEST_CASE("flow CSV round trip") {
    MeasureFlow flow;
    flow.times = {0.0, 0.5, 1.0};
    for (int k = 0; k < 3; ++k) {
        flow.measures.push_back(gaussian_grid(0.1 * k, 0.5 + 0.1 * k, -5.0, 0.05, 201));
    }
    const std::string path = "test_flow_roundtrip.csv";
    write_flow_csv(flow, path);
    const MeasureFlow back = read_flow_csv(path);
    std::remove(path.c_str());

    REQUIRE(back.times.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(back.times[k] == flow.times[k]);
        CHECK(back.measures[k].x_min == flow.measures[k].x_min);
        CHECK(back.measures[k].density == flow.measures[k].density);
        CHECK(back.measures[k].dx == doctest::Approx(flow.measures[k].dx).epsilon(1e-15));
    }

    std::ofstream bad("test_flow_bad.csv");
    bad << "wrong,header,here\n0,0,1\n";
    bad.close();
    CHECK_THROWS_AS(read_flow_csv("test_flow_bad.csv"), ParseError);
    std::remove("test_flow_bad.csv");
}

TEST_CASE("MeasureFlow validity checks") {
    MeasureFlow flow;
    flow.times = {0.0, 1.0};
    flow.measures.push_back(gaussian_grid(0.0, 1.0, -5.0, 0.05, 201));
    CHECK_THROWS_AS(check_valid(flow), InvalidArgumentError);
    flow.measures.push_back(gaussian_grid(0.0, 1.0, -5.0, 0.05, 201));
    CHECK_NOTHROW(check_valid(flow));
    flow.times = {0.5, 1.0};
    CHECK_THROWS_AS(check_valid(flow), InvalidArgumentError);
    flow.times = {0.0, 0.0};
    CHECK_THROWS_AS(check_valid(flow), InvalidArgumentError);
}
