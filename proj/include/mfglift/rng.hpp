#pragma once

#include <cstdint>
#include <random>

namespace mfglift {

/// Derive an independent stream seed from a root seed and an index.
/// Uses a splitmix64 finalization so nearby indices give unrelated seeds;
/// deterministic and platform independent.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Inverse standard-normal CDF. Acklam's rational approximation refined by
/// one Halley step against erfc, giving ~1e-15 absolute accuracy on (0,1).
double normal_quantile(double p);

/// Standard-normal CDF (via erfc), the inverse of normal_quantile.
double normal_cdf(double x);

/// Seeded random stream with reproducible, platform-independent output.
/// Uniforms are strictly inside (0,1) so they can be pushed through
/// quantile functions without hitting the endpoints.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on the open interval (0,1), 53-bit resolution.
    double uniform() {
        const std::uint64_t x = gen_();
        return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53;
    }

    /// Standard normal via inverse-CDF sampling.
    double normal() { return normal_quantile(uniform()); }

private:
    std::mt19937_64 gen_;
};

} // namespace mfglift
