#include "snorelab/core/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace snorelab {

namespace {

// Newton iteration on orthonormal Hermite polynomials with the usual
// asymptotic initial guesses for the largest roots.
GaussHermiteRule compute_rule(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: n must be positive");
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const double dn = static_cast<double>(n);
  std::vector<double> x(n), w(n);
  const std::size_t m = (n + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * dn + 1.0) - 1.85575 * std::pow(2.0 * dn + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(dn, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    bool converged = false;
    for (int its = 0; its < 100; ++its) {
      double p1 = pim4;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double dj = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / dj) * p2 - std::sqrt((dj - 1.0) / dj) * p3;
      }
      pp = std::sqrt(2.0 * dn) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-14 * std::max(1.0, std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw std::runtime_error("gauss_hermite: Newton iteration did not converge");
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  // Newton produced descending nodes; store ascending.
  GaussHermiteRule rule;
  rule.nodes.assign(x.rbegin(), x.rend());
  rule.weights.assign(w.rbegin(), w.rend());
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, GaussHermiteRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
  return it->second;
}

}  // namespace snorelab
