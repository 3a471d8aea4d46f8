#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "snorelab/core/schedule.hpp"
#include "snorelab/core/trace.hpp"
#include "snorelab/fidelity/fidelity.hpp"
#include "snorelab/prior/denoiser.hpp"

namespace snorelab {

/// Thrown by constants() when delta_0 exceeds the admissible step.
class StepRegimeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TheoryBounds {
  double L = 0.0;
  double rho = 0.0;
  double M = 0.0;
  double lambda = 0.0;
  double sigma = 0.0;
  double delta0 = 0.0;
  double M_bar = 0.0;      // max(rho, M)
  double L_F = 0.0;        // M + lambda (L + 1) / sigma^2
  double delta_max = 0.0;  // sigma^2 / (lambda (L + 1) + rho sigma^2)
  double A1 = 0.0, B1 = 0.0;
  double A2 = 0.0, B2 = 0.0;
  double A3 = 0.0, B3 = 0.0;
  std::optional<double> F_star;
  bool F_star_exact = true;  // false: best value found, not a certified infimum
};

enum class Verdict { Certified, Violated, Inconclusive };
const char* to_string(Verdict v) noexcept;

struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  double mc_stderr = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::pair<std::string, double>> details;  // constants echoed for audit
};

/// certified iff lhs <= rhs + 4 se; violated iff lhs - 4 se > rhs. With an
/// estimated F* a failure is reported as inconclusive instead of violated.
Verdict decide(double lhs, double rhs, double se, bool f_star_exact = true);

double max_step(double lambda, double sigma, double L, double rho);

/// Throws StepRegimeError if delta0 > max_step.
TheoryBounds constants(double lambda, double sigma, double L, double rho, double M, double delta0);

/// Minimiser of F = f + lambda g_sigma when both terms are quadratic: Gaussian
/// prior with a denoising or noisy-inpainting data term.
std::optional<Vector> analytic_minimizer(const Fidelity& fid, const GmmPrior& prior, double lambda, double sigma);
std::optional<double> analytic_minimum(const Fidelity& fid, const GmmPrior& prior, double lambda, double sigma);

/// Residual-sum check: seed-averaged sum_{k<N} ||x_{k+1} - x_k||^2 against
/// 2 delta_0 (F(x_0) - F*) + 4 lambda^2 L^2 / (sigma^2 (1 - delta_0 rho)) sum_{k<=N} delta_k^2.
BoundReport check_residual_bound(const std::vector<RunTrace>& traces, const TheoryBounds& tb,
                                 const StepSchedule& schedule);

/// Constant-step check: (1/(N+1)) sum_k E||grad F(x_k)||^2 against
/// A2 (F(x_0) - F*) / (delta (N+1)) + B2 delta.
BoundReport check_constant_step_bound(const std::vector<RunTrace>& traces, const TheoryBounds& tb, double delta,
                                      std::uint64_t n);

struct DecreasingReport {
  BoundReport report;
  std::vector<double> running_min;   // min_{j<=k} seed-mean ||grad F(x_j)||^2, k = 0..N
  std::vector<double> partial_sums;  // per run: sum_{k<=N} delta_k ||grad F(x_k)||^2
};

/// Decreasing-step check: min_k E||grad F(x_k)||^2 against
/// A3 (F(x_0) - F*) / sum delta_k + B3 sum delta_k^2 / sum delta_k.
DecreasingReport check_decreasing_bound(const std::vector<RunTrace>& traces, const TheoryBounds& tb,
                                        const StepSchedule& schedule, std::uint64_t n);

/// sum_{k<=n} delta_k ||grad F(x_k)||^2 along one trace.
double weighted_grad_sum(const RunTrace& trace, std::uint64_t n);

/// Summability proxy: per-run relative growth of sum_k delta_k ||grad F(x_k)||^2
/// from N to the end of the traces. lhs is the largest growth, rhs `tolerance`.
BoundReport check_summability(const std::vector<RunTrace>& traces, std::uint64_t n, double tolerance = 0.05);

/// Residual decay: seed-mean residual over the last `window` fraction of steps
/// against `ratio` times the mean over the first `window` fraction.
BoundReport check_residual_decay(const std::vector<RunTrace>& traces, double window = 0.05, double ratio = 0.1);

struct RateFit {
  double slope = 0.0;
  double expected = 0.0;  // alpha - 1
  std::size_t points = 0;
};

/// Least-squares slope of log(running min of seed-mean ||grad F||^2) against
/// log N over the last decade of N.
RateFit rate_slope(const std::vector<RunTrace>& traces, double alpha);

struct CounterexampleReport {
  double a = 0.0, lambda_g = 0.0, delta = 0.0, sigma_noise = 0.0;
  std::uint64_t iters = 0;
  std::size_t seeds = 0;
  std::size_t dim = 1;
  double x0 = 1.0;
  double min_mean_grad_sq = 0.0;
  double min_stderr = 0.0;
  std::uint64_t argmin_k = 0;
  double lower_bound = 0.0;          // sigma_noise^2 / 4
  double steady_closed_form = 0.0;   // stationary E||grad F||^2
  double steady_empirical = 0.0;     // mean over the second half of the run
  double steady_stderr = 0.0;
  bool floor_respected = false;
  bool steady_match = false;         // within 3 stderr
  bool deterministic = false;        // sigma_noise == 0
};

/// Quadratics f = a/2 ||x||^2, g = lambda_g/2 ||x||^2 with the noisy gradient
/// grad g + sigma_noise z and the proximal recursion
/// x_{k+1} = (x_k - delta lambda_g x_k - delta sigma_noise z_k) / (1 + delta a).
CounterexampleReport counterexample(double a, double lambda_g, double delta, double sigma_noise, std::uint64_t iters,
                                    std::size_t seeds, std::uint64_t seed = 0, std::size_t dim = 1, double x0 = 1.0);

}  // namespace snorelab
