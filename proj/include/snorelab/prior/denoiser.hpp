#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "snorelab/core/vector.hpp"
#include "snorelab/prior/gmm.hpp"

namespace snorelab {

/// Where the Jacobian of D_sigma is probed when no closed-form Lipschitz
/// constant exists.
struct ProbePlan {
  std::size_t random_probes = 1000;  // draws from p_sigma
  std::size_t segment_points = 101;  // per pair of means, t in [-0.25, 1.25]
  std::uint64_t seed = 0x5eed;
};

struct LipschitzEstimate {
  double value = 0.0;
  bool exact = false;  // false: max over probes only
  std::size_t probes = 0;
};

inline constexpr double kDefaultLipschitzSafety = 1.1;

/// Constant that enters step-size ceilings: exact values pass through,
/// probe estimates are inflated by `safety`.
double certified_lipschitz(const LipschitzEstimate& est, double safety = kDefaultLipschitzSafety);

/// Gradient-step denoiser D_sigma = Id - grad h_sigma.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual std::size_t dim() const = 0;
  virtual Vector denoise(const Vector& x, double sigma) const = 0;
  virtual double potential(const Vector& x, double sigma) const = 0;
  virtual LipschitzEstimate lipschitz(double sigma, const ProbePlan& plan = {}) const = 0;

  /// E_z[D_sigma(x + sigma z)] when a closed form is known.
  virtual std::optional<Vector> expected_denoise(const Vector&, double) const { return std::nullopt; }
  /// E_z[h_sigma(x + sigma z)] when a closed form is known.
  virtual std::optional<double> expected_potential(const Vector&, double) const { return std::nullopt; }
};

/// Exact MMSE denoiser of a GMM prior via Tweedie:
/// D_sigma(x) = x + sigma^2 grad log p_sigma(x), h_sigma = -sigma^2 log p_sigma.
class GmmDenoiser final : public Denoiser {
 public:
  explicit GmmDenoiser(GmmPrior prior) : prior_(std::move(prior)) {}

  const GmmPrior& prior() const noexcept { return prior_; }

  std::size_t dim() const override { return prior_.dim(); }
  Vector denoise(const Vector& x, double sigma) const override;
  double potential(const Vector& x, double sigma) const override;
  LipschitzEstimate lipschitz(double sigma, const ProbePlan& plan = {}) const override;
  std::optional<Vector> expected_denoise(const Vector& x, double sigma) const override;
  std::optional<double> expected_potential(const Vector& x, double sigma) const override;

 private:
  GmmPrior prior_;
};

/// Test surrogate: D(x) = c for every x, with h(x) = ||x||^2/2 - <c, x>.
class ConstantDenoiser final : public Denoiser {
 public:
  explicit ConstantDenoiser(Vector value) : value_(std::move(value)) {}

  std::size_t dim() const override { return value_.size(); }
  Vector denoise(const Vector& x, double sigma) const override;
  double potential(const Vector& x, double sigma) const override;
  LipschitzEstimate lipschitz(double, const ProbePlan& = {}) const override { return {0.0, true, 0}; }
  std::optional<Vector> expected_denoise(const Vector& x, double sigma) const override;
  std::optional<double> expected_potential(const Vector& x, double sigma) const override;

 private:
  Vector value_;
};

Vector mmse_denoise(const GmmDenoiser& den, double sigma, const Vector& x);
double potential(const GmmDenoiser& den, double sigma, const Vector& x);
LipschitzEstimate denoiser_lipschitz(const GmmDenoiser& den, double sigma, const ProbePlan& plan = {});

/// Spectral norm of the (symmetric) Jacobian of D_sigma at x.
double jacobian_spectral_norm(const GmmPrior& prior, double sigma, const Vector& x);

}  // namespace snorelab
