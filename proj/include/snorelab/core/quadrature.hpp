#pragma once

#include <cstddef>
#include <vector>

namespace snorelab {

/// Gauss-Hermite rule for the weight exp(-t^2) on the real line:
/// sum_j weights[j] * f(nodes[j]) ~ integral f(t) exp(-t^2) dt.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule, nodes in ascending order. Computed once per n and cached.
const GaussHermiteRule& gauss_hermite(std::size_t n);

}  // namespace snorelab
