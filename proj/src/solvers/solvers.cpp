#include "snorelab/solvers/solvers.hpp"

#include <cmath>
#include <stdexcept>

#include "snorelab/regularizer/regularizer.hpp"

namespace snorelab {

namespace {

void require_step(double delta, double lambda, double sigma) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("step size must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be non-negative");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
}

SolverState advance(const SolverState& s, Vector x, Vector z) {
  if (s.x.shape() && !x.shape()) x.set_shape(*s.x.shape());
  return {std::move(x), s.k + 1, std::move(z)};
}

}  // namespace

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::SnoreProx: return "snore-prox";
    case Method::Snore: return "snore";
    case Method::Red: return "red";
    case Method::RedProx: return "red-prox";
    case Method::Pnp: return "pnp";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "snore-prox") return Method::SnoreProx;
  if (name == "snore") return Method::Snore;
  if (name == "red") return Method::Red;
  if (name == "red-prox") return Method::RedProx;
  if (name == "pnp") return Method::Pnp;
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected snore-prox, snore, red, red-prox or pnp)");
}

bool is_stochastic(Method m) noexcept { return m == Method::SnoreProx || m == Method::Snore; }

void AnnealPlan::validate() const {
  if (stages == 0) throw std::invalid_argument("anneal.stages must be at least 1");
  if (!(sigma_last > 0.0) || !(sigma_first >= sigma_last)) {
    throw std::invalid_argument("anneal: require sigma_first >= sigma_last > 0");
  }
  if (!(lambda_first > 0.0) || !(lambda_last >= lambda_first)) {
    throw std::invalid_argument("anneal: require 0 < lambda_first <= lambda_last");
  }
}

void SolverConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("solver.lambda must be non-negative");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("solver.sigma must be positive");
  if (anneal) {
    anneal->validate();
    if (iters > 0 && anneal->stages > iters) throw std::invalid_argument("anneal.stages exceeds solver.iters");
  }
  if (telemetry.record_every == 0) throw std::invalid_argument("telemetry.record_every must be positive");
  if (telemetry.grad_samples < 2) throw std::invalid_argument("telemetry.grad_samples must be at least 2");
  if (telemetry.value_samples < 2) throw std::invalid_argument("telemetry.value_samples must be at least 2");
}

SolverState snore_prox_step_with(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                                 double lambda, double sigma, const Vector& z) {
  require_step(delta, lambda, sigma);
  Vector v = s.x;
  v.axpy(-delta * lambda, stoch_grad_g_with(den, sigma, s.x, z));
  return advance(s, fid.prox(delta, v), z);
}

SolverState snore_prox_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                            double lambda, double sigma, const RngStream& stream) {
  return snore_prox_step_with(s, fid, den, delta, lambda, sigma, gaussian_draw(stream, s.x.size()));
}

SolverState snore_step_with(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                            double lambda, double sigma, const Vector& z) {
  require_step(delta, lambda, sigma);
  Vector x = s.x;
  x.axpy(-delta, fid.grad(s.x));
  x.axpy(-delta * lambda, stoch_grad_g_with(den, sigma, s.x, z));
  return advance(s, std::move(x), z);
}

SolverState snore_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                       double lambda, double sigma, const RngStream& stream) {
  return snore_step_with(s, fid, den, delta, lambda, sigma, gaussian_draw(stream, s.x.size()));
}

SolverState red_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta, double lambda,
                     double sigma) {
  auto next = snore_step_with(s, fid, den, delta, lambda, sigma, Vector(s.x.size(), 0.0));
  next.last_z = Vector();
  return next;
}

SolverState red_prox_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta,
                          double lambda, double sigma) {
  auto next = snore_prox_step_with(s, fid, den, delta, lambda, sigma, Vector(s.x.size(), 0.0));
  next.last_z = Vector();
  return next;
}

SolverState pnp_step(const SolverState& s, const Fidelity& fid, const Denoiser& den, double delta, double sigma) {
  require_step(delta, 0.0, sigma);
  Vector v = s.x;
  v.axpy(-delta, fid.grad(s.x));
  return advance(s, den.denoise(v, sigma), Vector());
}

std::vector<StageParams> annealing_plan(const AnnealPlan& plan, std::uint64_t iters) {
  plan.validate();
  if (plan.stages > iters) throw std::invalid_argument("annealing_plan: more stages than iterations");
  const std::uint64_t m = plan.stages;
  const std::uint64_t len = (iters + m - 1) / m;
  std::vector<StageParams> stage(m);
  for (std::uint64_t j = 0; j < m; ++j) {
    const double t = m == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(m - 1);
    stage[j].sigma = plan.sigma_first * std::pow(plan.sigma_last / plan.sigma_first, t);
    stage[j].lambda = plan.lambda_first + (plan.lambda_last - plan.lambda_first) * t;
  }
  // Pin the endpoints against pow/interpolation rounding.
  stage.back().sigma = m == 1 ? plan.sigma_first : plan.sigma_last;
  stage.back().lambda = m == 1 ? plan.lambda_first : plan.lambda_last;

  std::vector<StageParams> out(iters);
  for (std::uint64_t k = 0; k < iters; ++k) out[k] = stage[std::min<std::uint64_t>(k / len, m - 1)];
  return out;
}

Vector default_initialization(const Fidelity& fid) {
  Vector x0 = fid.y();
  if (fid.kind() == FidelityKind::InpaintNoisy || fid.kind() == FidelityKind::InpaintNoiseless) {
    const Vector& mask = fid.mask();
    double sum = 0.0, count = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      if (mask[i] != 0.0) {
        sum += x0[i];
        count += 1.0;
      }
    }
    const double fill = count > 0.0 ? sum / count : 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      if (mask[i] == 0.0) x0[i] = fill;
    }
  }
  return x0;
}

}  // namespace snorelab
