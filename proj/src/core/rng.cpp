#include "snorelab/core/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace snorelab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b);
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::uint32_t checked_word(std::uint64_t v, const char* what) {
  if (v > 0xFFFFFFFFull) throw std::out_of_range(std::string("RngStream: ") + what + " exceeds 2^32-1");
  return static_cast<std::uint32_t>(v);
}

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// 53-bit uniforms from two 32-bit words.
inline double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;  // (0, 1]
}

inline double to_unit_closed_open(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;  // [0, 1)
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                         std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream RngStream::derive(std::string_view purpose) const noexcept {
  return RngStream(mix_seed(seed_, purpose), path_);
}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t block) const {
  const std::array<std::uint32_t, 4> ctr = {checked_word(block, "block"), checked_word(path_.sample, "sample"),
                                            checked_word(path_.iteration, "iteration"),
                                            checked_word(path_.run, "run")};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32(ctr, key);
}

Vector gaussian_draw(const RngStream& stream, std::size_t n) {
  if (n == 0) throw std::invalid_argument("gaussian_draw: n must be positive");
  std::vector<double> out(n);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t b = 0; 2 * b < n; ++b) {
    const auto w = stream.block(b);
    const double u1 = to_unit_open_closed(w[0], w[1]);
    const double u2 = to_unit_closed_open(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[2 * b] = r * std::cos(two_pi * u2);
    if (2 * b + 1 < n) out[2 * b + 1] = r * std::sin(two_pi * u2);
  }
  return Vector(std::move(out));
}

std::vector<double> uniform_draw(const RngStream& stream, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t b = 0; 2 * b < n; ++b) {
    const auto w = stream.block(b);
    out[2 * b] = to_unit_closed_open(w[0], w[1]);
    if (2 * b + 1 < n) out[2 * b + 1] = to_unit_closed_open(w[2], w[3]);
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return splitmix64(seed ^ splitmix64(h));
}

}  // namespace snorelab
