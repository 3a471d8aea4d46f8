#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "snorelab/cli/commands.hpp"
#include "snorelab/cli/config.hpp"

using namespace snorelab::cli;

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic denoiser-regularized restoration with certified bounds"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", snorelab::kVersion);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::string out_dir;
  std::size_t threads = 0;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--seed", seed, "Base seed (overrides ensemble.base_seed)");
  app.add_option("--seeds", seeds, "Number of seeded runs (overrides ensemble.n_seeds)")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory (default: $SNORELAB_OUT or .)");
  app.add_option("--threads", threads, "Worker threads (default: $SNORELAB_THREADS or all cores)");

  auto* run = app.add_subcommand("run", "Run a solver or seeded ensemble and write traces and the final image");
  auto* verify = app.add_subcommand("verify", "Certify the convergence bounds on an ensemble");
  std::string from_traces;
  verify->add_option("--from-traces", from_traces, "Re-check traces written by an earlier verify");
  auto* counter = app.add_subcommand("counterexample", "Noisy-gradient quadratic: stationary floor check");
  CounterexampleArgs cx;
  counter->add_option("--a", cx.a, "Curvature of f");
  counter->add_option("--lambda-g", cx.lambda_g, "Curvature of g");
  counter->add_option("--delta", cx.delta, "Constant step");
  counter->add_option("--sigma-noise", cx.sigma_noise, "Gradient noise level");
  counter->add_option("--iters", cx.iters, "Iterations N");
  auto* oracle = app.add_subcommand("prox-oracle", "Closed-form prox against a brute-force grid search");

  CLI11_PARSE(app, argc, argv);

  CommandContext ctx;
  ctx.out_dir = !out_dir.empty() ? out_dir : env("SNORELAB_OUT").value_or(".");
  if (threads == 0) {
    if (const auto t = env("SNORELAB_THREADS")) {
      try {
        threads = std::stoul(*t);
      } catch (const std::exception&) {
        std::cerr << "SNORELAB_THREADS must be a positive integer\n";
        return kExitRefused;
      }
    }
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  ctx.threads = threads;

  try {
    if (*counter) {
      if (seeds) cx.seeds = *seeds;
      if (seed) cx.seed = *seed;
      return cmd_counterexample(cx, ctx);
    }
    if (*oracle) return cmd_prox_oracle(seed.value_or(0), ctx);

    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = parse_config(config_path);
    } else if (*verify) {
      cfg = default_verify_config();
    } else {
      std::cerr << "run: --config is required\n";
      return kExitRefused;
    }
    apply_overrides(cfg, seed, seeds);
    if (*run) return cmd_run(cfg, ctx);
    return cmd_verify(cfg, ctx, from_traces.empty() ? std::nullopt : std::optional<std::string>(from_traces));
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitRefused;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}
