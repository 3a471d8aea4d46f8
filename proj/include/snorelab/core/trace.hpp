#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snorelab/core/vector.hpp"

namespace snorelab {

inline constexpr const char* kVersion = "0.1.0";

/// Telemetry for iterate x_k. `delta`, `lambda`, `sigma` and `residual`
/// describe the step taken from x_k, so residual = ||x_{k+1} - x_k||. The
/// final record (k = N) has no outgoing step and reports residual 0.
struct TraceRecord {
  std::uint64_t k = 0;
  double delta = 0.0;
  double lambda = 0.0;
  double sigma = 0.0;
  double residual = 0.0;
  double f_est = 0.0;
  double f_stderr = 0.0;
  double grad_sq_est = 0.0;
  double grad_sq_stderr = 0.0;
  std::optional<double> psnr;
};

struct RunMetadata {
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
  std::string config_hash;
  std::string method;
  std::string version = kVersion;
  bool aborted = false;
  std::vector<std::string> notes;
};

struct RunTrace {
  RunMetadata meta;
  std::vector<TraceRecord> records;
  Vector final_x;

  std::size_t iterations() const noexcept { return records.empty() ? 0 : records.back().k; }
  /// Copy holding records with k <= n (final_x is dropped).
  RunTrace truncated(std::uint64_t n) const;
};

/// 17 significant digits; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);

/// CSV with '#'-prefixed metadata lines followed by the column header
/// k,delta_k,lambda_k,sigma_k,residual,F_est,F_stderr,gradF_sq_est,gradF_sq_stderr,psnr
std::string trace_to_csv(const RunTrace& trace);
RunTrace parse_trace_csv(std::string_view text);

}  // namespace snorelab
