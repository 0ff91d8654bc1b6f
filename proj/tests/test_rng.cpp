#include "mfglift/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "mfglift/errors.hpp"

using namespace mfglift;

TEST_CASE("normal_quantile reproduces tabulated critical values") {
    // Reference values of the standard normal inverse CDF, correct to the
    // printed digits.
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
    CHECK(normal_quantile(0.25) == doctest::Approx(-0.6744897501960817).epsilon(1e-13));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.575829303548901).epsilon(1e-13));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.644853626951472).epsilon(1e-13));
    CHECK(normal_quantile(0.9995) == doctest::Approx(3.290526731491691).epsilon(1e-13));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("normal_quantile is antisymmetric and inverts the CDF") {
    const double ps[] = {1e-12, 1e-6, 0.01, 0.1, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9};
    for (double p : ps) {
        // Bitwise antisymmetry: 1 - pc is exact for pc in [0.5, 1).
        const double pc = 1.0 - p;
        CHECK(normal_quantile(pc) == -normal_quantile(1.0 - pc));
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), InvalidArgumentError);
    CHECK_THROWS_AS(normal_quantile(1.0), InvalidArgumentError);
    CHECK_THROWS_AS(normal_quantile(-0.5), InvalidArgumentError);
}

TEST_CASE("uniforms stay strictly inside (0,1) and are reproducible") {
    Rng rng(42);
    Rng rng_twin(42);
    double acc = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        acc += u;
        REQUIRE(rng_twin.uniform() == u);
    }
    CHECK(acc / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have the right first two moments") {
    Rng rng(7);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
    }
    const double m = s1 / n;
    CHECK(m == doctest::Approx(0.0).epsilon(1.0));
    CHECK(std::abs(m) < 0.01);
    CHECK(s2 / n - m * m == doctest::Approx(1.0).epsilon(0.015));
}

TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seen.insert(derive_seed(123, i));
    }
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(123, 0) != derive_seed(124, 0));
    CHECK(derive_seed(5, 9) == derive_seed(5, 9));

    // Streams from adjacent indices are decorrelated.
    Rng a(derive_seed(1, 0));
    Rng b(derive_seed(1, 1));
    double corr = 0.0;
    for (int i = 0; i < 10000; ++i) {
        corr += (a.uniform() - 0.5) * (b.uniform() - 0.5);
    }
    CHECK(std::abs(corr / 10000.0) < 0.005);
}
