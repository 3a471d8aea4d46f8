#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snorelab/core/rng.hpp"
#include "snorelab/core/vector.hpp"

namespace snorelab {

enum class FidelityKind { InpaintNoisy, InpaintNoiseless, DeblurCirculant, DenoiseQuadratic };

const char* to_string(FidelityKind kind) noexcept;
FidelityKind parse_fidelity_kind(std::string_view name);

struct FidelityConstants {
  double rho = 0.0;  // weak-convexity modulus
  double M = 0.0;    // smoothness (largest Hessian eigenvalue)
  bool differentiable = true;
};

/// Blur taps, row-major, centred on (height/2, width/2) and wrapped
/// periodically onto the image grid. Must sum to 1.
struct BlurKernel {
  Shape shape;
  std::vector<double> taps;

  static BlurKernel uniform(std::size_t size);
};

/// Data term f(x) = ||y - A x||^2 / (2 sigma_y^2), or the indicator of
/// {A x = y} for noiseless inpainting.
class Fidelity {
 public:
  static Fidelity denoise_quadratic(Vector y, double sigma_y);
  /// sigma_y = 0 yields InpaintNoiseless.
  static Fidelity inpaint(Vector mask, Vector y, double sigma_y);
  static Fidelity deblur(BlurKernel kernel, Vector y, double sigma_y);

  FidelityKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return y_.size(); }
  const Vector& y() const noexcept { return y_; }
  double sigma_y() const noexcept { return sigma_y_; }
  /// 0/1 per pixel for inpainting, empty otherwise.
  const Vector& mask() const noexcept { return mask_; }
  const std::optional<BlurKernel>& kernel() const noexcept { return kernel_; }
  bool differentiable() const noexcept { return kind_ != FidelityKind::InpaintNoiseless; }

  Vector forward(const Vector& x) const;
  Vector adjoint(const Vector& r) const;

  /// +infinity outside the constraint set for InpaintNoiseless.
  double eval(const Vector& x) const;
  /// Throws std::logic_error("non-differentiable fidelity") for InpaintNoiseless.
  Vector grad(const Vector& x) const;
  /// argmin_z ||z - x||^2 / (2 delta) + f(z).
  Vector prox(double delta, const Vector& x) const;
  FidelityConstants constants() const;

  /// Eigenvalues of A in the 2-D DFT basis (deblur only), row-major over
  /// the half-spectrum layout height x (width/2 + 1).
  std::vector<double> blur_spectrum_abs() const;

 private:
  struct Fft;

  Fidelity(FidelityKind kind, Vector y, double sigma_y) : kind_(kind), y_(std::move(y)), sigma_y_(sigma_y) {}

  void check_dim(const Vector& x, const char* where) const;

  FidelityKind kind_;
  Vector y_;
  double sigma_y_;
  Vector mask_;
  std::optional<BlurKernel> kernel_;
  std::shared_ptr<const Fft> fft_;
};

/// Problem description from which an observation is simulated.
struct FidelitySpec {
  FidelityKind kind = FidelityKind::DenoiseQuadratic;
  double sigma_y = 1.0;
  double missing_prob = 0.5;        // inpainting, when no explicit mask
  std::optional<Vector> mask;       // inpainting
  std::optional<BlurKernel> kernel; // deblurring
};

/// Mask with exactly floor((1 - p) d) observed entries, chosen by ranking
/// uniform keys drawn from `stream`.
Vector random_mask(std::size_t d, double missing_prob, const RngStream& stream);

/// Simulates y = A x_true + sigma_y z and returns the corresponding fidelity.
/// Masked entries of y are stored as 0.
Fidelity degrade(const FidelitySpec& spec, const Vector& x_true, const RngStream& stream);

inline double eval_f(const Fidelity& f, const Vector& x) { return f.eval(x); }
inline Vector grad_f(const Fidelity& f, const Vector& x) { return f.grad(x); }
inline Vector prox_f(const Fidelity& f, double delta, const Vector& x) { return f.prox(delta, x); }
inline FidelityConstants fidelity_constants(const Fidelity& f) { return f.constants(); }

}  // namespace snorelab
