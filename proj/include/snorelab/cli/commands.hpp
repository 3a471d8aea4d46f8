#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "snorelab/cli/config.hpp"
#include "snorelab/fidelity/fidelity.hpp"
#include "snorelab/theory/theory.hpp"

namespace snorelab::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;   // violated verdict, solver abort, oracle mismatch
inline constexpr int kExitRefused = 2;  // bad configuration or outside the certified class

struct CommandContext {
  std::string out_dir = ".";
  std::size_t threads = 1;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

/// Applies --seed / --seeds on top of a parsed configuration.
void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<std::size_t> seeds);

/// Solver run (or seeded ensemble): trace CSV per run, final image as PGM
/// plus sidecar, and a metadata JSON file.
int cmd_run(const ExperimentConfig& cfg, const CommandContext& ctx);

/// Built-in certified suite: d = 4 quadratic denoising, Gaussian prior,
/// 64 seeds.
ExperimentConfig default_verify_config();

struct VerifyResult {
  std::vector<BoundReport> reports;
  RateFit rate;
  bool rate_within_tolerance = false;
  int exit_code = kExitOk;
};

/// Runs the constant-step and decreasing-step ensembles and checks every
/// bound. With `from_traces` the traces previously written to that directory
/// are checked instead of running the solver.
VerifyResult verify(const ExperimentConfig& cfg, const CommandContext& ctx,
                    const std::optional<std::string>& from_traces = std::nullopt);
int cmd_verify(const ExperimentConfig& cfg, const CommandContext& ctx,
               const std::optional<std::string>& from_traces = std::nullopt);

inline constexpr double kRateSlopeTolerance = 0.15;

struct CounterexampleArgs {
  double a = 1.0;
  double lambda_g = 1.0;
  double delta = 0.1;
  double sigma_noise = 1.0;
  std::uint64_t iters = 10000;
  std::size_t seeds = 256;
  std::uint64_t seed = 0;
};

int cmd_counterexample(const CounterexampleArgs& args, const CommandContext& ctx);

using ProxFn = std::function<Vector(const Fidelity&, double, const Vector&)>;

struct ProxKindResult {
  FidelityKind kind = FidelityKind::DenoiseQuadratic;
  std::size_t cases = 0;
  double max_error = 0.0;
};

struct ProxOracleResult {
  std::vector<ProxKindResult> kinds;
  double tolerance = 1e-4;
  bool pass = false;
};

/// Every fidelity kind against the brute-force grid prox on `cases` random
/// (delta, x, y, sigma_y) draws, plus fixed reference cases. `prox` defaults
/// to Fidelity::prox and can be replaced to test the sweep itself.
ProxOracleResult prox_oracle_sweep(std::uint64_t seed, std::size_t cases = 100, const ProxFn& prox = {});
int cmd_prox_oracle(std::uint64_t seed, const CommandContext& ctx, const ProxFn& prox = {});

}  // namespace snorelab::cli
