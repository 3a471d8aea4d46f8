#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "snorelab/cli/config.hpp"
#include "snorelab/fidelity/fidelity.hpp"
#include "snorelab/prior/denoiser.hpp"
#include "snorelab/prior/gmm.hpp"

namespace snorelab::cli {

struct Problem {
  GmmPrior prior;
  std::shared_ptr<const GmmDenoiser> denoiser;
  Fidelity fidelity;
  std::optional<Vector> ground_truth;
  Vector x0;
  std::vector<std::string> notes;
};

GmmPrior build_prior(const ExperimentConfig& cfg);

/// Prior, denoiser, observation (simulated from the ground truth unless given
/// inline) and starting point. Randomness comes from the ensemble base seed.
Problem build_problem(const ExperimentConfig& cfg);

/// Lipschitz constant of the denoiser at sigma with the configured safety
/// factor applied to sampled estimates.
double certified_L(const Problem& p, const ExperimentConfig& cfg, double sigma);

/// Step ceiling at the hardest stage (largest lambda, smallest sigma).
double delta_max_for(const Problem& p, const ExperimentConfig& cfg);

}  // namespace snorelab::cli
