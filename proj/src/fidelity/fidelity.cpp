#include "snorelab/fidelity/fidelity.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace snorelab {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void require_sigma_y(double s, bool allow_zero) {
  if (!std::isfinite(s) || s < 0.0 || (!allow_zero && s == 0.0)) {
    throw std::invalid_argument(allow_zero ? "sigma_y must be non-negative" : "sigma_y must be positive");
  }
}

Vector like(const Vector& x, std::vector<double> v) {
  Vector out(std::move(v));
  if (x.shape()) out.set_shape(*x.shape());
  return out;
}

}  // namespace

struct Fidelity::Fft {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t half = 0;  // width / 2 + 1
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  std::vector<std::complex<double>> spectrum;  // kernel transfer function

  Fft(std::size_t h, std::size_t w) : height(h), width(w), half(w / 2 + 1) {
    const std::lock_guard lock(fftw_planner_mutex());
    double* re = fftw_alloc_real(h * w);
    fftw_complex* co = fftw_alloc_complex(h * half);
    forward = fftw_plan_dft_r2c_2d(static_cast<int>(h), static_cast<int>(w), re, co, FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_2d(static_cast<int>(h), static_cast<int>(w), co, re, FFTW_ESTIMATE);
    fftw_free(re);
    fftw_free(co);
    if (!forward || !inverse) throw std::runtime_error("FFTW planning failed");
  }
  ~Fft() {
    const std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::vector<std::complex<double>> transform(const std::vector<double>& x) const {
    double* re = fftw_alloc_real(height * width);
    fftw_complex* co = fftw_alloc_complex(height * half);
    std::copy(x.begin(), x.end(), re);
    fftw_execute_dft_r2c(forward, re, co);
    std::vector<std::complex<double>> out(height * half);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {co[i][0], co[i][1]};
    fftw_free(re);
    fftw_free(co);
    return out;
  }

  std::vector<double> inverse_transform(const std::vector<std::complex<double>>& c) const {
    double* re = fftw_alloc_real(height * width);
    fftw_complex* co = fftw_alloc_complex(height * half);
    for (std::size_t i = 0; i < c.size(); ++i) {
      co[i][0] = c[i].real();
      co[i][1] = c[i].imag();
    }
    fftw_execute_dft_c2r(inverse, co, re);
    const double scale = 1.0 / static_cast<double>(height * width);
    std::vector<double> out(re, re + height * width);
    for (double& v : out) v *= scale;
    fftw_free(re);
    fftw_free(co);
    return out;
  }

  template <class Fn>
  std::vector<double> apply(const std::vector<double>& x, Fn&& per_frequency) const {
    auto c = transform(x);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = per_frequency(c[i], spectrum[i]);
    return inverse_transform(c);
  }
};

const char* to_string(FidelityKind kind) noexcept {
  switch (kind) {
    case FidelityKind::InpaintNoisy: return "inpaint-noisy";
    case FidelityKind::InpaintNoiseless: return "inpaint-noiseless";
    case FidelityKind::DeblurCirculant: return "deblur-circulant";
    case FidelityKind::DenoiseQuadratic: return "denoise-quadratic";
  }
  return "?";
}

FidelityKind parse_fidelity_kind(std::string_view name) {
  if (name == "inpaint-noisy" || name == "inpaint") return FidelityKind::InpaintNoisy;
  if (name == "inpaint-noiseless") return FidelityKind::InpaintNoiseless;
  if (name == "deblur-circulant" || name == "deblur") return FidelityKind::DeblurCirculant;
  if (name == "denoise-quadratic" || name == "denoise") return FidelityKind::DenoiseQuadratic;
  throw std::invalid_argument("unknown fidelity kind '" + std::string(name) + "'");
}

BlurKernel BlurKernel::uniform(std::size_t size) {
  if (size == 0) throw std::invalid_argument("blur kernel size must be positive");
  const double v = 1.0 / static_cast<double>(size * size);
  return {{size, size}, std::vector<double>(size * size, v)};
}

Fidelity Fidelity::denoise_quadratic(Vector y, double sigma_y) {
  require_sigma_y(sigma_y, false);
  y.require_finite("observation");
  return Fidelity(FidelityKind::DenoiseQuadratic, std::move(y), sigma_y);
}

Fidelity Fidelity::inpaint(Vector mask, Vector y, double sigma_y) {
  require_sigma_y(sigma_y, true);
  require_same_dim(mask, y, "inpainting mask");
  for (double m : mask) {
    if (m != 0.0 && m != 1.0) throw std::invalid_argument("mask entries must be 0 or 1");
  }
  // Unobserved entries of y carry no information; store them as 0.
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mask[i] == 0.0) y[i] = 0.0;
  }
  Fidelity f(sigma_y > 0.0 ? FidelityKind::InpaintNoisy : FidelityKind::InpaintNoiseless, std::move(y), sigma_y);
  f.mask_ = std::move(mask);
  return f;
}

Fidelity Fidelity::deblur(BlurKernel kernel, Vector y, double sigma_y) {
  require_sigma_y(sigma_y, false);
  if (kernel.taps.size() != kernel.shape.size() || kernel.taps.empty()) {
    throw std::invalid_argument("blur kernel taps do not match its shape");
  }
  const double total = std::accumulate(kernel.taps.begin(), kernel.taps.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("blur kernel must sum to 1");
  const Shape img = y.shape() ? *y.shape() : Shape{1, y.size()};

  auto fft = std::make_shared<Fft>(img.height, img.width);
  std::vector<double> embedded(img.size(), 0.0);
  const auto h = static_cast<long>(img.height), w = static_cast<long>(img.width);
  for (std::size_t a = 0; a < kernel.shape.height; ++a) {
    for (std::size_t b = 0; b < kernel.shape.width; ++b) {
      const long dr = static_cast<long>(a) - static_cast<long>(kernel.shape.height / 2);
      const long dc = static_cast<long>(b) - static_cast<long>(kernel.shape.width / 2);
      const long r = ((dr % h) + h) % h, c = ((dc % w) + w) % w;
      embedded[static_cast<std::size_t>(r * w + c)] += kernel.taps[a * kernel.shape.width + b];
    }
  }
  fft->spectrum = fft->transform(embedded);

  Fidelity f(FidelityKind::DeblurCirculant, std::move(y), sigma_y);
  f.kernel_ = std::move(kernel);
  f.fft_ = std::move(fft);
  return f;
}

void Fidelity::check_dim(const Vector& x, const char* where) const {
  if (x.size() != y_.size()) throw DimensionMismatch(y_.size(), x.size(), where);
}

Vector Fidelity::forward(const Vector& x) const {
  check_dim(x, "Fidelity::forward");
  switch (kind_) {
    case FidelityKind::DenoiseQuadratic:
      return x;
    case FidelityKind::InpaintNoisy:
    case FidelityKind::InpaintNoiseless: {
      Vector out = x;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask_[i];
      return out;
    }
    case FidelityKind::DeblurCirculant:
      return like(x, fft_->apply(x.values(), [](auto c, auto k) { return c * k; }));
  }
  throw std::logic_error("unreachable");
}

Vector Fidelity::adjoint(const Vector& r) const {
  if (kind_ == FidelityKind::DeblurCirculant) {
    check_dim(r, "Fidelity::adjoint");
    return like(r, fft_->apply(r.values(), [](auto c, auto k) { return c * std::conj(k); }));
  }
  return forward(r);  // self-adjoint
}

double Fidelity::eval(const Vector& x) const {
  check_dim(x, "eval_f");
  if (kind_ == FidelityKind::InpaintNoiseless) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (mask_[i] != 0.0 && std::abs(x[i] - y_[i]) > 1e-12 * std::max(1.0, std::abs(y_[i]))) {
        return std::numeric_limits<double>::infinity();
      }
    }
    return 0.0;
  }
  const Vector r = forward(x) - y_;
  return r.squared_norm() / (2.0 * sigma_y_ * sigma_y_);
}

Vector Fidelity::grad(const Vector& x) const {
  if (kind_ == FidelityKind::InpaintNoiseless) throw std::logic_error("non-differentiable fidelity");
  check_dim(x, "grad_f");
  Vector g = adjoint(forward(x) - y_);
  g /= sigma_y_ * sigma_y_;
  if (x.shape()) g.set_shape(*x.shape());
  return g;
}

Vector Fidelity::prox(double delta, const Vector& x) const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("prox step must be positive");
  check_dim(x, "prox_f");
  Vector z = x;
  switch (kind_) {
    case FidelityKind::InpaintNoiseless:
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (mask_[i] != 0.0) z[i] = y_[i];
      }
      break;
    case FidelityKind::InpaintNoisy: {
      const double gain = 1.0 / (1.0 + sigma_y_ * sigma_y_ / delta);
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (mask_[i] != 0.0) z[i] = x[i] + gain * (y_[i] - x[i]);
      }
      break;
    }
    case FidelityKind::DenoiseQuadratic: {
      const double t = delta / (sigma_y_ * sigma_y_);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = (x[i] + t * y_[i]) / (1.0 + t);
      break;
    }
    case FidelityKind::DeblurCirculant: {
      const double t = delta / (sigma_y_ * sigma_y_);
      Vector rhs = x;
      rhs.axpy(t, adjoint(y_));
      z = like(x, fft_->apply(rhs.values(), [t](auto c, auto k) { return c / (1.0 + t * std::norm(k)); }));
      break;
    }
  }
  return z;
}

FidelityConstants Fidelity::constants() const {
  switch (kind_) {
    case FidelityKind::InpaintNoiseless:
      return {0.0, 0.0, false};
    case FidelityKind::InpaintNoisy:
    case FidelityKind::DenoiseQuadratic:
      return {0.0, 1.0 / (sigma_y_ * sigma_y_), true};
    case FidelityKind::DeblurCirculant: {
      double peak = 0.0;
      for (const auto& k : fft_->spectrum) peak = std::max(peak, std::norm(k));
      return {0.0, peak / (sigma_y_ * sigma_y_), true};
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<double> Fidelity::blur_spectrum_abs() const {
  if (!fft_) throw std::logic_error("blur_spectrum_abs: not a deblurring fidelity");
  std::vector<double> out;
  out.reserve(fft_->spectrum.size());
  for (const auto& k : fft_->spectrum) out.push_back(std::abs(k));
  return out;
}

Vector random_mask(std::size_t d, double missing_prob, const RngStream& stream) {
  if (!(missing_prob >= 0.0 && missing_prob <= 1.0)) throw std::invalid_argument("missing_prob must lie in [0, 1]");
  const auto observed = static_cast<std::size_t>(std::floor((1.0 - missing_prob) * static_cast<double>(d)));
  const std::vector<double> keys = uniform_draw(stream, d);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  Vector mask(d, 0.0);
  for (std::size_t i = 0; i < observed; ++i) mask[order[i]] = 1.0;
  return mask;
}

Fidelity degrade(const FidelitySpec& spec, const Vector& x_true, const RngStream& stream) {
  const std::size_t d = x_true.size();
  const auto noisy = [&](Vector ax) {
    if (spec.sigma_y > 0.0) ax.axpy(spec.sigma_y, gaussian_draw(stream.derive("observation-noise"), d));
    if (x_true.shape()) ax.set_shape(*x_true.shape());
    return ax;
  };
  switch (spec.kind) {
    case FidelityKind::DenoiseQuadratic:
      return Fidelity::denoise_quadratic(noisy(x_true), spec.sigma_y);
    case FidelityKind::InpaintNoisy:
    case FidelityKind::InpaintNoiseless: {
      const double sy = spec.kind == FidelityKind::InpaintNoiseless ? 0.0 : spec.sigma_y;
      if (spec.kind == FidelityKind::InpaintNoisy) require_sigma_y(sy, false);
      Vector mask = spec.mask ? *spec.mask : random_mask(d, spec.missing_prob, stream.derive("mask"));
      if (x_true.shape()) mask.set_shape(*x_true.shape());
      Vector y = x_true;
      for (std::size_t i = 0; i < d; ++i) y[i] *= mask[i];
      if (sy > 0.0) y.axpy(sy, gaussian_draw(stream.derive("observation-noise"), d));
      return Fidelity::inpaint(std::move(mask), std::move(y), sy);
    }
    case FidelityKind::DeblurCirculant: {
      BlurKernel k = spec.kernel ? *spec.kernel : BlurKernel::uniform(3);
      // Build once with y = 0 to get the forward operator, then observe.
      Vector zero(d, 0.0);
      if (x_true.shape()) zero.set_shape(*x_true.shape());
      const Fidelity blank = Fidelity::deblur(k, zero, spec.sigma_y);
      return Fidelity::deblur(std::move(k), noisy(blank.forward(x_true)), spec.sigma_y);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace snorelab
