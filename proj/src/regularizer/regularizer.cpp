#include "snorelab/regularizer/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "snorelab/core/quadrature.hpp"

namespace snorelab {

namespace {

void require_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
}

// Visits every node of the d-fold tensor rule for E_z[.], z ~ N(0, I_d):
// z = sqrt(2) t, weight = prod w_j / pi^{d/2}.
template <class Fn>
void for_each_gh_node(std::size_t d, std::size_t nodes, Fn&& fn) {
  const auto& rule = gauss_hermite(nodes);
  const double norm = std::pow(std::numbers::pi, -0.5 * static_cast<double>(d));
  std::vector<std::size_t> idx(d, 0);
  Vector z(d, 0.0);
  while (true) {
    double w = norm;
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = std::numbers::sqrt2 * rule.nodes[idx[j]];
      w *= rule.weights[idx[j]];
    }
    fn(z, w);
    std::size_t j = 0;
    while (j < d && ++idx[j] == nodes) idx[j++] = 0;
    if (j == d) break;
  }
}

Vector perturbed(const Vector& x, double sigma, const Vector& z) {
  Vector u = x;
  u.axpy(sigma, z);
  return u;
}

}  // namespace

StochGrad stoch_grad_g(const Denoiser& den, double sigma, const Vector& x, const RngStream& stream) {
  Vector z = gaussian_draw(stream, x.size());
  Vector g = stoch_grad_g_with(den, sigma, x, z);
  return {std::move(g), std::move(z)};
}

Vector stoch_grad_g_with(const Denoiser& den, double sigma, const Vector& x, const Vector& z) {
  require_sigma(sigma);
  require_same_dim(x, z, "stoch_grad_g");
  Vector g = x - den.denoise(perturbed(x, sigma, z), sigma);
  g /= sigma * sigma;
  if (x.shape()) g.set_shape(*x.shape());
  return g;
}

std::optional<Vector> expected_denoise(const Denoiser& den, double sigma, const Vector& x, std::size_t nodes) {
  require_sigma(sigma);
  if (auto closed = den.expected_denoise(x, sigma)) return closed;
  if (x.size() > kMaxQuadratureDim) return std::nullopt;
  Vector acc(x.size(), 0.0);
  for_each_gh_node(x.size(), nodes, [&](const Vector& z, double w) {
    acc.axpy(w, den.denoise(perturbed(x, sigma, z), sigma));
  });
  return acc;
}

bool has_exact_grad_g(const Denoiser& den, double sigma, std::size_t dim) {
  if (dim <= kMaxQuadratureDim) return true;
  return den.expected_denoise(Vector(dim, 0.0), sigma).has_value();
}

Vector exact_grad_g(const Denoiser& den, double sigma, const Vector& x) {
  auto mean = expected_denoise(den, sigma, x);
  if (!mean) {
    throw std::domain_error("exact_grad_g: no closed form and d = " + std::to_string(x.size()) +
                            " > 3 is beyond quadrature; use mc_grad_g");
  }
  Vector g = x - *mean;
  g /= sigma * sigma;
  if (x.shape()) g.set_shape(*x.shape());
  return g;
}

std::optional<double> exact_value_g(const Denoiser& den, double sigma, const Vector& x) {
  require_sigma(sigma);
  const double s2 = sigma * sigma;
  if (auto closed = den.expected_potential(x, sigma)) return *closed / s2;
  if (x.size() > kMaxQuadratureDim) return std::nullopt;
  double acc = 0.0;
  for_each_gh_node(x.size(), kQuadratureNodes,
                   [&](const Vector& z, double w) { acc += w * den.potential(perturbed(x, sigma, z), sigma); });
  return acc / s2;
}

GradEstimate mc_grad_g_with(const Denoiser& den, double sigma, const Vector& x, const std::vector<Vector>& zs) {
  const std::size_t n = zs.size();
  if (n < 2) throw std::invalid_argument("mc_grad_g: n must be at least 2");
  std::vector<Vector> draws;
  draws.reserve(n);
  for (const auto& z : zs) draws.push_back(stoch_grad_g_with(den, sigma, x, z));

  const std::size_t d = x.size();
  Vector mean(d, 0.0);
  for (const auto& g : draws) mean += g;
  mean /= static_cast<double>(n);
  Vector var(d, 0.0);
  for (const auto& g : draws) {
    for (std::size_t j = 0; j < d; ++j) {
      const double e = g[j] - mean[j];
      var[j] += e * e;
    }
  }
  GradEstimate est;
  est.n = n;
  est.component_stderr = Vector(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    est.component_stderr[j] = std::sqrt(var[j] / static_cast<double>(n - 1) / static_cast<double>(n));
    est.std_error = std::max(est.std_error, est.component_stderr[j]);
  }
  if (x.shape()) mean.set_shape(*x.shape());
  est.value = std::move(mean);
  return est;
}

GradEstimate mc_grad_g(const Denoiser& den, double sigma, const Vector& x, std::size_t n, const RngStream& stream) {
  if (n < 2) throw std::invalid_argument("mc_grad_g: n must be at least 2");
  std::vector<Vector> zs;
  zs.reserve(n);
  for (std::size_t j = 0; j < n; ++j) zs.push_back(gaussian_draw(stream.with_sample(j), x.size()));
  return mc_grad_g_with(den, sigma, x, zs);
}

ScalarEstimate mc_value_g(const Denoiser& den, double sigma, const Vector& x, std::size_t n,
                          const RngStream& stream) {
  require_sigma(sigma);
  if (n < 2) throw std::invalid_argument("mc_value_g: n must be at least 2");
  const double s2 = sigma * sigma;
  std::vector<double> vals(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Vector z = gaussian_draw(stream.with_sample(j), x.size());
    vals[j] = den.potential(perturbed(x, sigma, z), sigma) / s2;
    sum += vals[j];
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)), n};
}

BiasReport bias_second_moment(const Denoiser& den, double sigma, const Vector& x, std::size_t n,
                              const RngStream& stream) {
  return bias_second_moment(den, sigma, x, n, stream, certified_lipschitz(den.lipschitz(sigma)));
}

BiasReport bias_second_moment(const Denoiser& den, double sigma, const Vector& x, std::size_t n,
                              const RngStream& stream, double lipschitz) {
  if (n < 2) throw std::invalid_argument("bias_second_moment: n must be at least 2");
  const Vector exact = exact_grad_g(den, sigma, x);
  std::vector<double> sq(n);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Vector z = gaussian_draw(stream.with_sample(j), x.size());
    sq[j] = (stoch_grad_g_with(den, sigma, x, z) - exact).squared_norm();
    sum += sq[j];
  }
  BiasReport rep;
  rep.n = n;
  rep.estimate = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : sq) ss += (v - rep.estimate) * (v - rep.estimate);
  rep.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  rep.bound = 2.0 * lipschitz * lipschitz / (sigma * sigma);
  rep.violated = rep.estimate - 4.0 * rep.std_error > rep.bound;
  return rep;
}

}  // namespace snorelab
