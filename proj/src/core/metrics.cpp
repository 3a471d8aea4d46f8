#include "snorelab/core/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace snorelab {

double mean_squared_error(const Vector& x, const Vector& ref) {
  require_same_dim(x, ref, "mean_squared_error");
  if (x.empty()) throw std::invalid_argument("mean_squared_error: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] - ref[i];
    acc += e * e;
  }
  return acc / static_cast<double>(x.size());
}

double psnr(const Vector& x, const Vector& ref, double peak) {
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const double mse = mean_squared_error(x, ref);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace snorelab
