#include "snorelab/cli/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "snorelab/core/trace.hpp"

namespace snorelab::cli {

namespace {

Shape require_shape(const Vector& image) {
  if (!image.shape()) throw PgmError("image has no shape");
  if (image.shape()->size() != image.size()) throw PgmError("image shape does not match its size");
  return *image.shape();
}

std::string stamp_line(const ImageStamp& s) {
  return "config_hash=" + s.config_hash + " seed=" + std::to_string(s.seed) + " version=" + s.version;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PgmError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PgmError("write failed for '" + path + "'");
}

// Header tokenizer: whitespace separated, '#' comments run to end of line.
class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : b_(bytes) {}

  std::string token() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_])) && b_[pos_] != '#') ++pos_;
    if (start == pos_) throw PgmError("malformed PGM header: truncated");
    return b_.substr(start, pos_ - start);
  }

  std::size_t number() {
    const std::string t = token();
    std::size_t v = 0;
    for (char c : t) {
      if (!std::isdigit(static_cast<unsigned char>(c))) throw PgmError("malformed PGM header: bad number '" + t + "'");
      v = v * 10 + static_cast<std::size_t>(c - '0');
      if (v > (std::size_t{1} << 40)) throw PgmError("malformed PGM header: number too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_]))) {
      throw PgmError("malformed PGM header: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip() {
    while (pos_ < b_.size()) {
      if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint8_t quantize(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

std::string encode_pgm(const Vector& image, const ImageStamp& stamp) {
  const Shape s = require_shape(image);
  std::string out = "P5\n# " + stamp_line(stamp) + "\n" + std::to_string(s.width) + " " +
                    std::to_string(s.height) + "\n255\n";
  out.reserve(out.size() + image.size());
  for (double v : image) out.push_back(static_cast<char>(quantize(v)));
  return out;
}

Vector decode_pgm(const std::string& bytes) {
  HeaderReader rd(bytes);
  if (rd.token() != "P5") throw PgmError("malformed PGM header: expected magic P5");
  const std::size_t width = rd.number();
  const std::size_t height = rd.number();
  const std::size_t maxval = rd.number();
  if (width == 0 || height == 0) throw PgmError("malformed PGM header: zero dimension");
  if (maxval == 0 || maxval > 255) throw PgmError("malformed PGM header: maxval must lie in [1, 255]");
  const std::size_t start = rd.raster_start();
  const std::size_t n = width * height;
  if (bytes.size() - start != n) {
    throw PgmError("PGM raster holds " + std::to_string(bytes.size() - start) + " bytes, header declares " +
                   std::to_string(width) + "x" + std::to_string(height));
  }
  std::vector<double> px(n);
  for (std::size_t i = 0; i < n; ++i) {
    px[i] = static_cast<double>(static_cast<unsigned char>(bytes[start + i])) / static_cast<double>(maxval);
  }
  return Vector(std::move(px), Shape{height, width});
}

void write_pgm(const std::string& path, const Vector& image, const ImageStamp& stamp) {
  spill(path, encode_pgm(image, stamp));
}

Vector read_pgm(const std::string& path) { return decode_pgm(slurp(path)); }

void write_sidecar(const std::string& path, const Vector& image, const ImageStamp& stamp) {
  const Shape s = require_shape(image);
  std::string out = "# " + stamp_line(stamp) + "\n" + std::to_string(s.height) + " " + std::to_string(s.width) + "\n";
  for (double v : image) out += format_double(v) + "\n";
  spill(path, out);
}

Vector read_sidecar(const std::string& path) {
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
  }
  std::size_t h = 0, w = 0;
  {
    std::istringstream hdr(line);
    if (!(hdr >> h >> w) || h == 0 || w == 0) throw PgmError("malformed sidecar header in '" + path + "'");
  }
  std::vector<double> px;
  px.reserve(h * w);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      throw PgmError("malformed sidecar value '" + line + "'");
    }
    if (used != line.size()) throw PgmError("malformed sidecar value '" + line + "'");
    px.push_back(v);
  }
  if (px.size() != h * w) throw PgmError("sidecar holds " + std::to_string(px.size()) + " values, header declares " +
                                         std::to_string(h) + "x" + std::to_string(w));
  return Vector(std::move(px), Shape{h, w});
}

std::string sidecar_path(const std::string& pgm_path) { return pgm_path + ".raw"; }

}  // namespace snorelab::cli
