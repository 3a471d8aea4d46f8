#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "snorelab/core/vector.hpp"

namespace snorelab {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the output is
/// a function of (counter, key) only.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                         std::array<std::uint32_t, 2> key) noexcept;

/// Position of a draw inside a seeded experiment.
struct RngPath {
  std::uint64_t run = 0;        // ensemble member / run id
  std::uint64_t iteration = 0;  // solver iteration k
  std::uint64_t sample = 0;     // Monte-Carlo sample index
};

/// Counter-based random stream. Every draw is a pure function of
/// (seed, path, element index), so any worker may produce any draw and
/// results do not depend on evaluation order or thread count.
///
/// Path components are folded into 32-bit counter words; runs, iterations
/// and samples must stay below 2^32.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed, RngPath path = {}) : seed_(seed), path_(path) {}

  std::uint64_t seed() const noexcept { return seed_; }
  const RngPath& path() const noexcept { return path_; }

  RngStream at(std::uint64_t iteration, std::uint64_t sample = 0) const noexcept {
    return RngStream(seed_, RngPath{path_.run, iteration, sample});
  }
  RngStream with_sample(std::uint64_t sample) const noexcept {
    return RngStream(seed_, RngPath{path_.run, path_.iteration, sample});
  }
  RngStream with_run(std::uint64_t run) const noexcept {
    return RngStream(seed_, RngPath{run, path_.iteration, path_.sample});
  }
  /// Independent stream for a named purpose (e.g. "solver", "telemetry").
  RngStream derive(std::string_view purpose) const noexcept;

  /// Four raw 32-bit words for block `block` of this path.
  std::array<std::uint32_t, 4> block(std::uint64_t block) const;

 private:
  std::uint64_t seed_ = 0;
  RngPath path_{};
};

/// n independent standard normal variates (Box-Muller on Philox output).
Vector gaussian_draw(const RngStream& stream, std::size_t n);

/// n independent uniforms in [0, 1).
std::vector<double> uniform_draw(const RngStream& stream, std::size_t n);

/// 64-bit mixing of a seed with a string label (splitmix64 finaliser over FNV-1a).
std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) noexcept;

}  // namespace snorelab
