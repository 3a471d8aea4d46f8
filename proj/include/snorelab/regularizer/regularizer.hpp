#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "snorelab/core/rng.hpp"
#include "snorelab/core/vector.hpp"
#include "snorelab/prior/denoiser.hpp"

namespace snorelab {

// g_sigma(x) = E_z[h_sigma(x + sigma z)] / sigma^2, z ~ N(0, I_d).

struct StochGrad {
  Vector grad;  // (x - D_sigma(x + sigma z)) / sigma^2
  Vector z;
};

struct GradEstimate {
  Vector value;
  double std_error = 0.0;  // max over components
  Vector component_stderr;
  std::size_t n = 0;
};

struct ScalarEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct BiasReport {
  double estimate = 0.0;  // MC mean of ||zeta||^2
  double std_error = 0.0;
  double bound = 0.0;     // 2 L^2 / sigma^2
  bool violated = false;  // estimate - 4 std_error > bound
  std::size_t n = 0;
};

/// Largest d for which K > 1 expectations are done by tensor Gauss-Hermite.
inline constexpr std::size_t kMaxQuadratureDim = 3;
inline constexpr std::size_t kQuadratureNodes = 64;

/// Single-sample SNORE estimate; z is drawn from `stream`.
StochGrad stoch_grad_g(const Denoiser& den, double sigma, const Vector& x, const RngStream& stream);

/// Same estimate for a given z (replay).
Vector stoch_grad_g_with(const Denoiser& den, double sigma, const Vector& x, const Vector& z);

/// E_z[D_sigma(x + sigma z)]: closed form if the denoiser has one, tensor
/// Gauss-Hermite for d <= 3, otherwise std::nullopt.
std::optional<Vector> expected_denoise(const Denoiser& den, double sigma, const Vector& x,
                                       std::size_t nodes = kQuadratureNodes);

/// True when exact_grad_g can be evaluated at dimension `dim`.
bool has_exact_grad_g(const Denoiser& den, double sigma, std::size_t dim);

/// grad g_sigma(x) = (x - E_z[D_sigma(x + sigma z)]) / sigma^2.
/// Throws std::domain_error when neither a closed form nor quadrature applies;
/// use mc_grad_g there.
Vector exact_grad_g(const Denoiser& den, double sigma, const Vector& x);

/// g_sigma(x) in closed form or by quadrature; std::nullopt otherwise.
std::optional<double> exact_value_g(const Denoiser& den, double sigma, const Vector& x);

/// Mean of n single-sample estimates, sample j drawn at stream.with_sample(j).
GradEstimate mc_grad_g(const Denoiser& den, double sigma, const Vector& x, std::size_t n, const RngStream& stream);

/// Mean over the given noise vectors.
GradEstimate mc_grad_g_with(const Denoiser& den, double sigma, const Vector& x, const std::vector<Vector>& zs);

/// MC mean of h_sigma(x + sigma z) / sigma^2.
ScalarEstimate mc_value_g(const Denoiser& den, double sigma, const Vector& x, std::size_t n,
                          const RngStream& stream);

/// MC estimate of E||zeta||^2 with zeta = stoch_grad_g - exact_grad_g, against
/// 2 L^2 / sigma^2 where L comes from the denoiser (probe estimates inflated).
BiasReport bias_second_moment(const Denoiser& den, double sigma, const Vector& x, std::size_t n,
                              const RngStream& stream);
BiasReport bias_second_moment(const Denoiser& den, double sigma, const Vector& x, std::size_t n,
                              const RngStream& stream, double lipschitz);

}  // namespace snorelab
