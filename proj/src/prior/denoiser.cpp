#include "snorelab/prior/denoiser.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "prior_detail.hpp"
#include "snorelab/core/rng.hpp"

namespace snorelab {

double certified_lipschitz(const LipschitzEstimate& est, double safety) {
  if (!(safety >= 1.0)) throw std::invalid_argument("Lipschitz safety factor must be >= 1");
  return est.exact ? est.value : est.value * safety;
}

Vector GmmDenoiser::denoise(const Vector& x, double sigma) const {
  const auto post = detail::mixture_posterior(prior_, sigma, x);
  Vector d = x;
  d.axpy(sigma * sigma, detail::score_from(prior_, post, x));
  return d;
}

double GmmDenoiser::potential(const Vector& x, double sigma) const {
  return -sigma * sigma * smoothed_log_density(prior_, sigma, x);
}

LipschitzEstimate GmmDenoiser::lipschitz(double sigma, const ProbePlan& plan) const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (prior_.is_gaussian()) {
    const double t2 = prior_.variance(0);
    return {t2 / (t2 + sigma * sigma), true, 0};
  }
  LipschitzEstimate est;
  auto probe = [&](const Vector& x) {
    est.value = std::max(est.value, jacobian_spectral_norm(prior_, sigma, x));
    ++est.probes;
  };
  for (const auto& mu : prior_.means()) probe(mu);

  const std::size_t k = prior_.components();
  const std::size_t m = plan.segment_points;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      for (std::size_t s = 0; s < m; ++s) {
        const double t = m == 1 ? 0.5 : -0.25 + 1.5 * static_cast<double>(s) / static_cast<double>(m - 1);
        Vector x = prior_.mean(i) * (1.0 - t);
        x.axpy(t, prior_.mean(j));
        probe(x);
      }
    }
  }

  // Draws from p_sigma: a prior draw plus independent sigma-noise.
  const RngStream base = RngStream(plan.seed).derive("lipschitz-probes");
  for (std::size_t n = 0; n < plan.random_probes; ++n) {
    const RngStream s = base.at(n);
    Vector x = prior_.sample(s.derive("prior"));
    x.axpy(sigma, gaussian_draw(s.derive("noise"), prior_.dim()));
    probe(x);
  }
  return est;
}

std::optional<Vector> GmmDenoiser::expected_denoise(const Vector& x, double sigma) const {
  if (!prior_.is_gaussian()) return std::nullopt;
  require_same_dim(x, prior_.mean(0), "expected_denoise");
  const double t2 = prior_.variance(0);
  const double c = t2 / (t2 + sigma * sigma);
  Vector out = prior_.mean(0);
  out.axpy(c, x - prior_.mean(0));
  return out;
}

std::optional<double> GmmDenoiser::expected_potential(const Vector& x, double sigma) const {
  if (!prior_.is_gaussian()) return std::nullopt;
  require_same_dim(x, prior_.mean(0), "expected_potential");
  const double s2 = sigma * sigma;
  const double s = prior_.variance(0) + s2;
  const double d = static_cast<double>(x.size());
  const double sq = (x - prior_.mean(0)).squared_norm();
  return s2 * ((sq + d * s2) / (2.0 * s) + 0.5 * d * std::log(2.0 * std::numbers::pi * s));
}

Vector ConstantDenoiser::denoise(const Vector& x, double) const {
  require_same_dim(x, value_, "ConstantDenoiser");
  return value_;
}

double ConstantDenoiser::potential(const Vector& x, double) const {
  require_same_dim(x, value_, "ConstantDenoiser");
  return 0.5 * x.squared_norm() - x.dot(value_);
}

std::optional<Vector> ConstantDenoiser::expected_denoise(const Vector& x, double) const {
  require_same_dim(x, value_, "ConstantDenoiser");
  return value_;
}

std::optional<double> ConstantDenoiser::expected_potential(const Vector& x, double sigma) const {
  return potential(x, sigma) + 0.5 * static_cast<double>(x.size()) * sigma * sigma;
}

Vector mmse_denoise(const GmmDenoiser& den, double sigma, const Vector& x) { return den.denoise(x, sigma); }

double potential(const GmmDenoiser& den, double sigma, const Vector& x) { return den.potential(x, sigma); }

LipschitzEstimate denoiser_lipschitz(const GmmDenoiser& den, double sigma, const ProbePlan& plan) {
  return den.lipschitz(sigma, plan);
}

double jacobian_spectral_norm(const GmmPrior& prior, double sigma, const Vector& x) {
  // J = c I + sigma^2 A W A^T with a_i = (mu_i - x)/s_i, W = diag(r) - r r^T,
  // c = 1 - sigma^2 sum_i r_i / s_i.
  const auto post = detail::mixture_posterior(prior, sigma, x);
  const std::size_t k = prior.components();
  const std::size_t d = x.size();
  const double s2 = sigma * sigma;

  Eigen::MatrixXd a(d, k);
  Eigen::VectorXd r(k);
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    r(i) = post.resp[i];
    c -= s2 * post.resp[i] / post.smoothed_variance[i];
    for (std::size_t j = 0; j < d; ++j) a(j, i) = (prior.mean(i)[j] - x[j]) / post.smoothed_variance[i];
  }
  const Eigen::MatrixXd w = Eigen::MatrixXd(r.asDiagonal()) - r * r.transpose();

  if (d <= k) {
    Eigen::MatrixXd jac = s2 * a * w * a.transpose();
    jac.diagonal().array() += c;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  // Nonzero spectrum of A W A^T equals that of W^{1/2} A^T A W^{1/2}; the
  // remaining d - rank directions carry eigenvalue c.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ws(w);
  const Eigen::VectorXd wl = ws.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd wh = ws.eigenvectors() * wl.asDiagonal() * ws.eigenvectors().transpose();
  const Eigen::MatrixXd g = wh * (a.transpose() * a) * wh;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(g, Eigen::EigenvaluesOnly);
  double norm = std::abs(c);
  for (Eigen::Index i = 0; i < gs.eigenvalues().size(); ++i) {
    norm = std::max(norm, std::abs(c + s2 * gs.eigenvalues()(i)));
  }
  return norm;
}

}  // namespace snorelab
