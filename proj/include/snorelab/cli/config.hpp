#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "snorelab/core/vector.hpp"
#include "snorelab/fidelity/fidelity.hpp"
#include "snorelab/solvers/solvers.hpp"

namespace snorelab::cli {

/// Configuration error; `line` is 0 when the position is unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// One component mean: a constant broadcast over every coordinate, an
/// explicit list, or a named pattern image.
struct MeanSpec {
  enum class Kind { Constant, Explicit, Pattern } kind = Kind::Constant;
  double value = 0.0;
  std::vector<double> values;
  std::string pattern;
};

struct PriorConfig {
  std::vector<double> weights{1.0};
  std::vector<MeanSpec> means{MeanSpec{}};
  std::vector<double> variances{1.0};
  double lipschitz_safety = 1.1;
  std::size_t lipschitz_probes = 1000;
};

struct ProblemConfig {
  FidelityKind kind = FidelityKind::DenoiseQuadratic;
  std::size_t dim = 4;
  std::optional<Shape> shape;
  double sigma_y = 1.0;
  double missing_prob = 0.5;
  std::size_t kernel_size = 3;
  /// "prior-sample", "prior-mean" or a path to a PGM file.
  std::string ground_truth = "prior-sample";
  std::optional<std::vector<double>> observation;  // inline y, skips simulation
  std::optional<std::vector<double>> mask;         // inline 0/1 mask
  std::string mask_file;                           // or a file of 0/1 values
  std::optional<std::vector<double>> x0;           // inline start (one value broadcasts)
};

struct VerifyConfig {
  double step_fraction = 0.5;     // constant step as a fraction of delta_max
  std::optional<double> delta0;   // absolute constant step; defaults to schedule.c when given
  std::uint64_t iters = 500;      // constant-step runs
  double alpha = 0.75;            // decreasing runs: delta_k = c / (k + 1)^alpha
  double decay_fraction = 1.0;    // c as a fraction of delta_max
  std::uint64_t decay_iters = 10000;
};

struct OutputConfig {
  std::string trace = "trace.csv";
  std::string image = "final.pgm";
  std::string report = "reports.json";
};

struct ExperimentConfig {
  ProblemConfig problem;
  PriorConfig prior;
  SolverConfig solver;
  std::size_t n_seeds = 1;
  std::optional<std::string> n_init;  // recorded, unused
  VerifyConfig verify;
  OutputConfig outputs;

  std::uint64_t seed() const noexcept { return solver.seed; }
  std::size_t dim() const noexcept { return problem.shape ? problem.shape->size() : problem.dim; }
};

/// Parses flat dotted keys ("schedule.c": 0.5); nested objects are flattened
/// the same way. Numbers may be given as "a/b" strings. Unknown keys and
/// invalid values raise ConfigError.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::string& path);

/// Canonical JSON with every field present, sorted keys.
std::string serialize_config(const ExperimentConfig& cfg);

/// 16 hex digits of FNV-1a over serialize_config().
std::string config_hash(const ExperimentConfig& cfg);

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& cfg);

}  // namespace snorelab::cli
