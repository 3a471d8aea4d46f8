#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "snorelab/core/rng.hpp"
#include "snorelab/core/vector.hpp"
#include "snorelab/prior/gmm.hpp"

// Brute-force references. Nothing here calls the denoiser, regularizer,
// solver or theory code; only prior parameters and core utilities are used.

namespace snorelab::oracles {

struct Grid {
  double lo = -10.0;
  double hi = 10.0;
  std::size_t steps = 4001;
};

struct OracleConfig {
  double fd_step = 1e-5;
  Grid grid;
  std::size_t quad_nodes = 64;
  std::size_t mc_n = 10000;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

using ScalarField = std::function<double(const Vector&)>;
using ScalarFn = std::function<double(double)>;

/// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h.
Vector fd_gradient(const ScalarField& fun, const Vector& x, double h = 1e-5);

/// argmin_z (z - x)^2 / (2 delta) + f(z) by exhaustive grid search followed by
/// a golden-section pass on the bracketing cells. `extra` points are scored
/// alongside the grid (for constraints such as z = y that a grid would miss);
/// if one of them wins it is returned as is. Throws std::runtime_error
/// ("widen grid") when the minimiser sits on the grid boundary.
double grid_prox(const ScalarFn& f, double delta, double x, const OracleConfig& cfg = {},
                 const std::vector<double>& extra = {});

/// E[X | X + sigma Z = x] for X ~ prior by tensor Gauss-Hermite, integrating
/// each component against whichever of its two Gaussian factors is narrower.
Vector quadrature_posterior_mean(const GmmPrior& prior, double sigma, const Vector& x, std::size_t nodes = 64);

struct McResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct McVectorResult {
  Vector mean;
  Vector std_error;
  std::size_t n = 0;
};

/// Monte-Carlo mean of fun(x + sigma z), z_j drawn at stream.with_sample(j).
McResult mc_expectation(const ScalarField& fun, double sigma, const Vector& x, std::size_t n,
                        const RngStream& stream);
McVectorResult mc_expectation_vector(const std::function<Vector(const Vector&)>& fun, double sigma, const Vector& x,
                                     std::size_t n, const RngStream& stream);

}  // namespace snorelab::oracles
