#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "snorelab/core/rng.hpp"
#include "snorelab/core/vector.hpp"

namespace snorelab {

/// Isotropic Gaussian mixture prior p = sum_i w_i N(mu_i, tau_i^2 I_d).
///
/// Smoothing by N(0, sigma^2 I_d) keeps the family closed:
/// p_sigma = sum_i w_i N(mu_i, (tau_i^2 + sigma^2) I_d).
class GmmPrior {
 public:
  GmmPrior(std::vector<double> weights, std::vector<Vector> means, std::vector<double> variances);

  static GmmPrior gaussian(Vector mean, double variance);

  std::size_t components() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return means_.front().size(); }
  bool is_gaussian() const noexcept { return weights_.size() == 1; }

  double weight(std::size_t i) const { return weights_.at(i); }
  const Vector& mean(std::size_t i) const { return means_.at(i); }
  /// tau_i^2
  double variance(std::size_t i) const { return variances_.at(i); }

  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<Vector>& means() const noexcept { return means_; }
  const std::vector<double>& variances() const noexcept { return variances_; }

  /// Same prior with every mean shifted by `shift`.
  GmmPrior translated(const Vector& shift) const;

  /// One draw from p (component by weight, then Gaussian).
  Vector sample(const RngStream& stream) const;

  /// log p(x) of the unsmoothed prior.
  double log_density(const Vector& x) const;

 private:
  std::vector<double> weights_;
  std::vector<Vector> means_;
  std::vector<double> variances_;
  std::vector<double> log_weights_;
};

/// Deterministic image-shaped means for toy priors: "ramp-x" (0.15 + 0.7 u),
/// "ramp-y" (0.15 + 0.7 v), "disk" (0.8 inside radius 0.3 of the centre, 0.2
/// outside), "flat" (0.5). u, v are pixel-centre coordinates in [0, 1].
Vector pattern_image(std::string_view name, Shape shape);

/// Posterior responsibilities r_i(x) under p_sigma; non-negative, summing to 1.
std::vector<double> responsibilities(const GmmPrior& prior, double sigma, const Vector& x);

/// log p_sigma(x) via max-shifted log-sum-exp.
double smoothed_log_density(const GmmPrior& prior, double sigma, const Vector& x);

/// grad log p_sigma(x) = sum_i r_i(x) (mu_i - x) / (tau_i^2 + sigma^2).
Vector score(const GmmPrior& prior, double sigma, const Vector& x);

}  // namespace snorelab
