#include "snorelab/oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "snorelab/core/quadrature.hpp"

namespace snorelab::oracles {

void OracleConfig::validate() const {
  if (!(fd_step > 0.0)) throw std::invalid_argument("oracle.fd_step must be positive");
  if (!(grid.hi > grid.lo)) throw std::invalid_argument("oracle.grid: hi must exceed lo");
  if (grid.steps < 100) throw std::invalid_argument("oracle.grid.steps must be at least 100");
  if (quad_nodes < 16) throw std::invalid_argument("oracle.quad_nodes must be at least 16");
  if (mc_n < 2) throw std::invalid_argument("oracle.mc_n must be at least 2");
}

Vector fd_gradient(const ScalarField& fun, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  Vector g(x.size(), 0.0);
  Vector probe = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double up = fun(probe);
    probe[j] = x[j] - h;
    const double down = fun(probe);
    probe[j] = x[j];
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

double grid_prox(const ScalarFn& f, double delta, double x, const OracleConfig& cfg, const std::vector<double>& extra) {
  cfg.validate();
  if (!(delta > 0.0)) throw std::invalid_argument("grid_prox: delta must be positive");
  const auto phi = [&](double z) { return (z - x) * (z - x) / (2.0 * delta) + f(z); };

  const std::size_t n = cfg.grid.steps;
  const double step = (cfg.grid.hi - cfg.grid.lo) / static_cast<double>(n - 1);
  const auto node = [&](std::size_t i) { return cfg.grid.lo + step * static_cast<double>(i); };

  std::size_t best = n;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = phi(node(i));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }

  double z_best = std::numeric_limits<double>::quiet_NaN();
  if (best < n) {
    if (best == 0 || best == n - 1) throw std::runtime_error("grid_prox: minimiser on grid boundary, widen grid");
    double a = node(best - 1), b = node(best + 1);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = phi(c), fd = phi(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = phi(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = phi(d);
      }
    }
    // Keep the grid node if refinement did not improve on it (e.g. at an
    // isolated finite point of an indicator).
    z_best = node(best);
    const double mid = 0.5 * (a + b), v_mid = phi(mid);
    if (v_mid <= best_val) {
      z_best = mid;
      best_val = v_mid;
    }
  }
  for (double e : extra) {
    const double v = phi(e);
    if (v <= best_val) {
      best_val = v;
      z_best = e;
    }
  }
  if (!std::isfinite(best_val)) throw std::runtime_error("grid_prox: objective is infinite on the whole grid");
  return z_best;
}

Vector quadrature_posterior_mean(const GmmPrior& prior, double sigma, const Vector& x, std::size_t nodes) {
  const std::size_t d = x.size();
  if (d > 3) throw std::invalid_argument("quadrature_posterior_mean: d must be at most 3");
  if (d != prior.dim()) throw DimensionMismatch(prior.dim(), d, "quadrature_posterior_mean");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const auto& rule = gauss_hermite(nodes);
  const double s2 = sigma * sigma;

  const auto log_normal = [d](const Vector& u, const Vector& m, double var) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += (u[j] - m[j]) * (u[j] - m[j]);
    return -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * var) - 0.5 * sq / var;
  };

  // Collect log-weights of every (component, node) pair, then normalise with
  // one shift so well-separated components do not underflow.
  std::vector<double> logw;
  std::vector<Vector> points;
  std::size_t total = prior.components();
  for (std::size_t j = 0; j < d; ++j) total *= nodes;
  logw.reserve(total);
  points.reserve(total);

  for (std::size_t i = 0; i < prior.components(); ++i) {
    const double t2 = prior.variance(i);
    const bool around_prior = t2 <= s2;
    const Vector& centre = around_prior ? prior.mean(i) : x;
    const double scale = std::sqrt(2.0 * (around_prior ? t2 : s2));
    std::vector<std::size_t> idx(d, 0);
    while (true) {
      Vector u(d, 0.0);
      double lw = std::log(prior.weight(i)) - 0.5 * static_cast<double>(d) * std::log(std::numbers::pi);
      for (std::size_t j = 0; j < d; ++j) {
        u[j] = centre[j] + scale * rule.nodes[idx[j]];
        lw += std::log(rule.weights[idx[j]]);
      }
      lw += around_prior ? log_normal(x, u, s2) : log_normal(u, prior.mean(i), t2);
      logw.push_back(lw);
      points.push_back(std::move(u));
      std::size_t j = 0;
      while (j < d && ++idx[j] == nodes) idx[j++] = 0;
      if (j == d) break;
    }
  }

  const double shift = *std::max_element(logw.begin(), logw.end());
  double denom = 0.0;
  Vector num(d, 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double w = std::exp(logw[p] - shift);
    denom += w;
    num.axpy(w, points[p]);
  }
  num /= denom;
  return num;
}

McResult mc_expectation(const ScalarField& fun, double sigma, const Vector& x, std::size_t n,
                        const RngStream& stream) {
  if (n < 2) throw std::invalid_argument("mc_expectation: n must be at least 2");
  std::vector<double> vals(n);
  double sum = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    Vector u = x;
    u.axpy(sigma, gaussian_draw(stream.with_sample(s), x.size()));
    vals[s] = fun(u);
    sum += vals[s];
  }
  McResult r;
  r.n = n;
  r.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : vals) ss += (v - r.mean) * (v - r.mean);
  r.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return r;
}

McVectorResult mc_expectation_vector(const std::function<Vector(const Vector&)>& fun, double sigma, const Vector& x,
                                     std::size_t n, const RngStream& stream) {
  if (n < 2) throw std::invalid_argument("mc_expectation: n must be at least 2");
  std::vector<Vector> vals;
  vals.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    Vector u = x;
    u.axpy(sigma, gaussian_draw(stream.with_sample(s), x.size()));
    vals.push_back(fun(u));
  }
  const std::size_t m = vals.front().size();
  McVectorResult r;
  r.n = n;
  r.mean = Vector(m, 0.0);
  for (const auto& v : vals) r.mean += v;
  r.mean /= static_cast<double>(n);
  r.std_error = Vector(m, 0.0);
  for (const auto& v : vals) {
    for (std::size_t j = 0; j < m; ++j) r.std_error[j] += (v[j] - r.mean[j]) * (v[j] - r.mean[j]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    r.std_error[j] = std::sqrt(r.std_error[j] / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return r;
}

}  // namespace snorelab::oracles
