#include "snorelab/prior/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "prior_detail.hpp"

namespace snorelab {

GmmPrior::GmmPrior(std::vector<double> weights, std::vector<Vector> means, std::vector<double> variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  const std::size_t k = weights_.size();
  if (k == 0) throw std::invalid_argument("GmmPrior: at least one component required");
  if (means_.size() != k || variances_.size() != k) {
    throw std::invalid_argument("GmmPrior: weights, means and variances must have equal length");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("GmmPrior: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("GmmPrior: weights must sum to 1");
  for (double v : variances_) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("GmmPrior: variances must be positive");
  }
  const std::size_t d = means_.front().size();
  if (d == 0) throw std::invalid_argument("GmmPrior: means must be non-empty");
  for (const auto& m : means_) {
    if (m.size() != d) throw DimensionMismatch(d, m.size(), "GmmPrior means");
  }
  log_weights_.reserve(k);
  for (double w : weights_) log_weights_.push_back(std::log(w));
}

GmmPrior GmmPrior::gaussian(Vector mean, double variance) {
  std::vector<Vector> means;
  means.push_back(std::move(mean));
  return GmmPrior({1.0}, std::move(means), {variance});
}

GmmPrior GmmPrior::translated(const Vector& shift) const {
  std::vector<Vector> shifted;
  shifted.reserve(means_.size());
  for (const auto& m : means_) shifted.push_back(m + shift);
  return GmmPrior(weights_, std::move(shifted), variances_);
}

Vector GmmPrior::sample(const RngStream& stream) const {
  const double u = uniform_draw(stream.with_sample(0), 1).front();
  std::size_t i = 0;
  double acc = weights_[0];
  while (u >= acc && i + 1 < weights_.size()) acc += weights_[++i];
  Vector x = means_[i];
  x.axpy(std::sqrt(variances_[i]), gaussian_draw(stream.with_sample(1), dim()));
  if (means_[i].shape()) x.set_shape(*means_[i].shape());
  return x;
}

double GmmPrior::log_density(const Vector& x) const {
  std::vector<double> terms(components());
  for (std::size_t i = 0; i < components(); ++i) {
    terms[i] = log_weights_[i] + detail::log_gaussian(x, means_[i], variances_[i]);
  }
  return detail::log_sum_exp(terms);
}

namespace detail {

double log_gaussian(const Vector& x, const Vector& mean, double variance) {
  require_same_dim(x, mean, "log_gaussian");
  double sq = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double e = x[j] - mean[j];
    sq += e * e;
  }
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * variance) - 0.5 * sq / variance;
}

double log_sum_exp(const std::vector<double>& terms) {
  const double m = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

MixturePosterior mixture_posterior(const GmmPrior& prior, double sigma, const Vector& x) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  require_same_dim(x, prior.mean(0), "mixture posterior");
  const std::size_t k = prior.components();
  const double s2 = sigma * sigma;
  MixturePosterior post;
  post.log_terms.resize(k);
  post.smoothed_variance.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    post.smoothed_variance[i] = prior.variance(i) + s2;
    post.log_terms[i] = std::log(prior.weight(i)) + log_gaussian(x, prior.mean(i), post.smoothed_variance[i]);
  }
  post.log_density = log_sum_exp(post.log_terms);
  post.resp.resize(k);
  for (std::size_t i = 0; i < k; ++i) post.resp[i] = std::exp(post.log_terms[i] - post.log_density);
  return post;
}

Vector score_from(const GmmPrior& prior, const MixturePosterior& post, const Vector& x) {
  Vector s(x.size(), 0.0);
  for (std::size_t i = 0; i < prior.components(); ++i) {
    const double coef = post.resp[i] / post.smoothed_variance[i];
    if (coef == 0.0) continue;
    const Vector& mu = prior.mean(i);
    for (std::size_t j = 0; j < x.size(); ++j) s[j] += coef * (mu[j] - x[j]);
  }
  return s;
}

}  // namespace detail

Vector pattern_image(std::string_view name, Shape shape) {
  if (shape.size() == 0) throw std::invalid_argument("pattern_image: empty shape");
  std::vector<double> v(shape.size());
  for (std::size_t r = 0; r < shape.height; ++r) {
    for (std::size_t c = 0; c < shape.width; ++c) {
      const double u = (static_cast<double>(c) + 0.5) / static_cast<double>(shape.width);
      const double w = (static_cast<double>(r) + 0.5) / static_cast<double>(shape.height);
      double val = 0.0;
      if (name == "ramp-x") {
        val = 0.15 + 0.7 * u;
      } else if (name == "ramp-y") {
        val = 0.15 + 0.7 * w;
      } else if (name == "disk") {
        const double du = u - 0.5, dw = w - 0.5;
        val = (du * du + dw * dw <= 0.09) ? 0.8 : 0.2;
      } else if (name == "flat") {
        val = 0.5;
      } else {
        throw std::invalid_argument("pattern_image: unknown pattern '" + std::string(name) + "'");
      }
      v[r * shape.width + c] = val;
    }
  }
  return Vector(std::move(v), shape);
}

std::vector<double> responsibilities(const GmmPrior& prior, double sigma, const Vector& x) {
  return detail::mixture_posterior(prior, sigma, x).resp;
}

double smoothed_log_density(const GmmPrior& prior, double sigma, const Vector& x) {
  return detail::mixture_posterior(prior, sigma, x).log_density;
}

Vector score(const GmmPrior& prior, double sigma, const Vector& x) {
  return detail::score_from(prior, detail::mixture_posterior(prior, sigma, x), x);
}

}  // namespace snorelab
