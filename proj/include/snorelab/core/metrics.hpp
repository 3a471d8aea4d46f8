#pragma once

#include "snorelab/core/vector.hpp"

namespace snorelab {

double mean_squared_error(const Vector& x, const Vector& ref);

/// 10*log10(peak^2 / MSE) in dB. Returns +infinity when MSE is exactly zero.
/// Pixel values are taken to live in [0, 1], hence the default peak.
double psnr(const Vector& x, const Vector& ref, double peak = 1.0);

}  // namespace snorelab
