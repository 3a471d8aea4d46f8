#pragma once

#include <vector>

#include "snorelab/prior/gmm.hpp"

namespace snorelab::detail {

double log_gaussian(const Vector& x, const Vector& mean, double variance);
double log_sum_exp(const std::vector<double>& terms);

struct MixturePosterior {
  std::vector<double> log_terms;          // log w_i + log N(x; mu_i, s_i I)
  std::vector<double> smoothed_variance;  // s_i = tau_i^2 + sigma^2
  std::vector<double> resp;               // r_i(x)
  double log_density = 0.0;               // log p_sigma(x)
};

MixturePosterior mixture_posterior(const GmmPrior& prior, double sigma, const Vector& x);
Vector score_from(const GmmPrior& prior, const MixturePosterior& post, const Vector& x);

}  // namespace snorelab::detail
