#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "snorelab/core/vector.hpp"

namespace snorelab::cli {

class PgmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Provenance written into the PGM comment line and the sidecar header.
struct ImageStamp {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
};

/// 8-bit level of a pixel value: clamp to [0, 1], then floor(v * 255 + 0.5).
std::uint8_t quantize(double v) noexcept;

/// Binary P5, maxval 255. The image must carry a shape.
std::string encode_pgm(const Vector& image, const ImageStamp& stamp);
Vector decode_pgm(const std::string& bytes);

void write_pgm(const std::string& path, const Vector& image, const ImageStamp& stamp);
Vector read_pgm(const std::string& path);

/// Lossless text sidecar: a header line "height width", then one value per
/// line with 17 significant digits.
void write_sidecar(const std::string& path, const Vector& image, const ImageStamp& stamp);
Vector read_sidecar(const std::string& path);

/// `image.pgm` -> `image.pgm.raw`
std::string sidecar_path(const std::string& pgm_path);

}  // namespace snorelab::cli
