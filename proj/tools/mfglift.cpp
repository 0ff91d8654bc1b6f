// Command-line front end: decodes flags into a RunConfig and hands off to
// the library pipeline. All behavior lives in src/cli.cpp so it is unit
// tested; this file only maps argv.
#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "mfglift/cli.hpp"

namespace {

/// Parse "a..b" (or a single "a") into an inclusive seed range.
bool parse_seed_range(const std::string& text, std::uint64_t& lo,
                      std::uint64_t& hi) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            lo = hi = std::stoull(text);
            return true;
        }
        lo = std::stoull(text.substr(0, dots));
        hi = std::stoull(text.substr(dots + 2));
        return true;
    } catch (...) {
        return false;
    }
}

void add_common_flags(CLI::App* cmd, mfglift::RunConfig& config,
                      std::string& seeds_text) {
    cmd->add_option("--config", config.model_path, "Model config file");
    cmd->add_option("--output", config.output_dir, "Output directory");
    cmd->add_option("--dx", config.dx, "State grid spacing override");
    cmd->add_option("--dt", config.dt, "Time step override");
    cmd->add_option("--fp-tol", config.fp_tol,
                    "Fixed-point residual tolerance");
    cmd->add_option("--max-iter", config.max_iter,
                    "Fixed-point iteration cap");
    cmd->add_option("--theta", config.theta, "Fixed-point damping in (0, 1]");
    cmd->add_option("--n-particles", config.n_particles,
                    "Monte Carlo ensemble size");
    cmd->add_option("--seeds", seeds_text,
                    "Seed sweep a..b (inclusive) for verify");
    cmd->add_option("--common-seed", config.common_seed,
                    "Base seed of the per-particle streams");
    cmd->add_option("--seed", config.noise_seed,
                    "Aggregate-noise path seed for lift");
    cmd->add_option("--threads", config.threads,
                    "Worker threads (MFGLIFT_THREADS caps this)");
    cmd->add_flag("--waive-lipschitz", config.lipschitz_waiver,
                  "Assert the aggregate pair is Lipschitz despite the "
                  "failing structural screen");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Mean field game equilibria with aggregate noise: solve the base "
        "game, lift it along a noise path, invert the lift, and verify by "
        "Monte Carlo."};
    app.require_subcommand(1);

    mfglift::RunConfig config;
    std::string seeds_text;

    struct Sub {
        const char* name;
        const char* help;
        bool takes_archive;
    };
    const Sub subs[] = {
        {"solve-ncn", "Solve the base mean field game from a model config",
         false},
        {"benchmark-lq",
         "Compare the grid solver against the closed-form tracking model",
         false},
        {"lift", "Lift a base archive along a sampled aggregate-noise path",
         true},
        {"inverse-lift",
         "Recover the shift and base flow from an aggregate archive", true},
        {"verify", "Monte Carlo verification of an equilibrium archive",
         true},
        {"check-assumptions",
         "Validate the existence conditions of a model config", false},
    };
    for (const Sub& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
        if (sub.takes_archive) {
            cmd->add_option("archive", config.archive_path,
                            "Input archive directory")
                ->required();
        }
        add_common_flags(cmd, config, seeds_text);
        cmd->callback([&config, name = std::string(sub.name)] {
            config.command = name;
        });
    }

    CLI11_PARSE(app, argc, argv);

    if (!seeds_text.empty()) {
        if (!parse_seed_range(seeds_text, config.seed_lo, config.seed_hi)) {
            std::fprintf(stderr, "error: cannot parse --seeds `%s` (want a..b)\n",
                         seeds_text.c_str());
            return 2;
        }
        config.has_seed_sweep = true;
    }
    return mfglift::run(config);
}
