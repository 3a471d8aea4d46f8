#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snorelab/core/rng.hpp"
#include "snorelab/core/schedule.hpp"
#include "snorelab/core/trace.hpp"
#include "snorelab/core/vector.hpp"
#include "snorelab/fidelity/fidelity.hpp"
#include "snorelab/prior/denoiser.hpp"

namespace snorelab {

enum class Method { SnoreProx, Snore, Red, RedProx, Pnp };

const char* to_string(Method m) noexcept;
Method parse_method(std::string_view name);
bool is_stochastic(Method m) noexcept;

/// Stagewise schedule for (lambda, sigma): sigma decreases geometrically,
/// lambda increases linearly, both constant within a stage.
struct AnnealPlan {
  std::size_t stages = 1;
  double lambda_first = 1.0;
  double lambda_last = 1.0;
  double sigma_first = 1.0;
  double sigma_last = 1.0;

  void validate() const;
};

struct TelemetryConfig {
  std::size_t grad_samples = 256;   // MC samples when no exact grad g_sigma
  std::size_t value_samples = 256;  // MC samples when no exact g_sigma
  std::uint64_t record_every = 1;
};

struct SolverConfig {
  Method method = Method::SnoreProx;
  StepSchedule schedule = StepSchedule::constant(0.1);
  double lambda = 1.0;
  double sigma = 1.0;
  std::uint64_t iters = 100;
  std::uint64_t seed = 0;
  std::optional<AnnealPlan> anneal;
  TelemetryConfig telemetry;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct SolverState {
  Vector x;
  std::uint64_t k = 0;
  Vector last_z;  // noise used by the last stochastic step (empty otherwise)
};

struct StageParams {
  double lambda = 0.0;
  double sigma = 0.0;
};

/// Prox_{delta f}(x - delta lambda (x - D_sigma(x + sigma z)) / sigma^2).
SolverState snore_prox_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                            double lambda, double sigma, const RngStream& stream);
SolverState snore_prox_step_with(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                                 double lambda, double sigma, const Vector& z);

/// x - delta grad f(x) - delta lambda (x - D_sigma(x + sigma z)) / sigma^2.
SolverState snore_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                       double lambda, double sigma, const RngStream& stream);
SolverState snore_step_with(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                            double lambda, double sigma, const Vector& z);

/// snore_step with z = 0.
SolverState red_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta, double lambda,
                     double sigma);
/// snore_prox_step with z = 0.
SolverState red_prox_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                          double lambda, double sigma);
/// D_sigma(x - delta grad f(x)).
SolverState pnp_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta, double sigma);

/// (lambda_k, sigma_k) for k = 0..iters-1, in stages of ceil(iters / m).
std::vector<StageParams> annealing_plan(const AnnealPlan& plan, std::uint64_t iters);

/// Observation with unobserved pixels replaced by the mean of observed ones.
Vector default_initialization(const Fidelity& fid);

struct ObjectiveTelemetry {
  double f_value = 0.0;
  double f_stderr = 0.0;
  double grad_sq = 0.0;
  double grad_sq_stderr = 0.0;
  bool exact = false;
};

/// F = f + lambda g_sigma and ||grad F||^2 at x. Uses closed forms, then
/// quadrature for d <= 2, then Monte Carlo with the configured sample counts.
ObjectiveTelemetry objective_telemetry(const Fidelity& fid, const Denoiser& den, double lambda, double sigma,
                                       const Vector& x, const TelemetryConfig& cfg, const RngStream& stream);

/// Largest dimension for which telemetry integrates by quadrature.
inline constexpr std::size_t kTelemetryQuadratureDim = 2;

struct RunOptions {
  std::optional<Vector> ground_truth;
  std::uint64_t run = 0;
  std::string config_hash;
  std::vector<std::string> notes;
};

RunTrace run(const SolverConfig& cfg, const Fidelity& fid, const Denoiser& den, const Vector& x0,
             const RunOptions& opts = {});

/// Members r = 0..n_runs-1 share cfg.seed and differ in run id; the result is
/// independent of `threads`.
std::vector<RunTrace> run_ensemble(const SolverConfig& cfg, const Fidelity& fid, const Denoiser& den,
                                   const Vector& x0, std::size_t n_runs, std::size_t threads,
                                   const RunOptions& opts = {});

}  // namespace snorelab
