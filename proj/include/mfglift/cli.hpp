#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace mfglift {

/// One decoded command-line invocation. The binary parses flags into this
/// struct and calls run(); tests drive run() directly.
///
/// Commands:
///   solve-ncn          model config -> base-equilibrium archive
///   benchmark-lq       closed-form vs grid solver on the tracking model
///   lift               base archive + noise seed -> aggregate archive
///   inverse-lift       aggregate archive -> recovered shift + base flow
///   verify             archive -> Monte Carlo verification report
///   check-assumptions  model config -> existence-condition report
struct RunConfig {
    std::string command;
    /// Model config file (--config); solve-ncn, benchmark-lq (optional
    /// there), check-assumptions.
    std::string model_path;
    /// Input archive directory; lift, inverse-lift, verify.
    std::string archive_path;
    /// Output directory (--output). verify defaults it to the archive
    /// itself; the other writers require it.
    std::string output_dir;

    /// Numerics. Zero means "keep the model's / flow's own value".
    double dx = 0.0;
    double dt = 0.0;
    double fp_tol = 1e-4;
    int max_iter = 60;
    double theta = 0.5;

    /// Monte Carlo.
    std::size_t n_particles = 10000;
    /// --seeds a..b (inclusive): sweep of aggregate-noise seeds for
    /// verify; each seed lifts the base with a fresh driving path.
    std::uint64_t seed_lo = 0;
    std::uint64_t seed_hi = 0;
    bool has_seed_sweep = false;
    /// Base seed of the per-particle idiosyncratic streams.
    std::uint64_t common_seed = 0;
    /// Aggregate-path seed used by lift.
    std::uint64_t noise_seed = 1;
    bool lipschitz_waiver = false;
    /// Worker threads for seed sweeps; 0 reads MFGLIFT_THREADS, then uses
    /// the hardware count.
    int threads = 0;

    /// Summary sink; null means std::cout.
    std::ostream* out = nullptr;
};

/// Execute one pipeline: runs the command, writes its artifacts, prints a
/// one-line summary per invoked check ([PASS]/[FAIL] ... ). Returns 0 iff
/// every invoked check passed, 1 when a check failed, 2 on errors (bad
/// arguments, unreadable files, numerical failures), which are printed as
/// `error: ...` instead of escaping as exceptions.
int run(const RunConfig& config);

} // namespace mfglift
