#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "snorelab/core/metrics.hpp"
#include "snorelab/regularizer/regularizer.hpp"
#include "snorelab/solvers/solvers.hpp"

namespace snorelab {

ObjectiveTelemetry objective_telemetry(const Fidelity& fid, const Denoiser& den, double lambda, double sigma,
                                       const Vector& x, const TelemetryConfig& cfg, const RngStream& stream) {
  ObjectiveTelemetry t;
  t.exact = true;
  const std::size_t d = x.size();
  t.f_value = fid.eval(x);

  // For noiseless inpainting the stationarity measure is the gradient of
  // lambda g_sigma projected onto the free (unobserved) pixels.
  const bool smooth_f = fid.differentiable();
  Vector grad = smooth_f ? fid.grad(x) : Vector(d, 0.0);
  Vector reg_se(d, 0.0);

  if (lambda != 0.0) {
    const bool closed_value = den.expected_potential(x, sigma).has_value();
    if (closed_value || d <= kTelemetryQuadratureDim) {
      t.f_value += lambda * *exact_value_g(den, sigma, x);
    } else {
      const auto v = mc_value_g(den, sigma, x, cfg.value_samples, stream.derive("value"));
      t.f_value += lambda * v.value;
      t.f_stderr = lambda * v.std_error;
      t.exact = false;
    }

    const bool closed_grad = den.expected_denoise(x, sigma).has_value();
    if (closed_grad || d <= kTelemetryQuadratureDim) {
      grad.axpy(lambda, exact_grad_g(den, sigma, x));
    } else {
      const auto g = mc_grad_g(den, sigma, x, cfg.grad_samples, stream.derive("grad"));
      grad.axpy(lambda, g.value);
      reg_se = g.component_stderr * lambda;
      t.exact = false;
    }
  }

  if (!smooth_f) {
    for (std::size_t i = 0; i < d; ++i) {
      if (fid.mask()[i] != 0.0) {
        grad[i] = 0.0;
        reg_se[i] = 0.0;
      }
    }
  }

  // ||m||^2 overestimates ||E m||^2 by sum se_j^2; remove that bias and use
  // the delta method for the standard error.
  double sq = grad.squared_norm();
  double bias = 0.0, var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    bias += reg_se[j] * reg_se[j];
    var += grad[j] * grad[j] * reg_se[j] * reg_se[j];
  }
  t.grad_sq = std::max(0.0, sq - bias);
  t.grad_sq_stderr = 2.0 * std::sqrt(var);
  return t;
}

RunTrace run(const SolverConfig& cfg, const Fidelity& fid, const Denoiser& den, const Vector& x0,
             const RunOptions& opts) {
  cfg.validate();
  if (x0.size() != fid.dim()) throw DimensionMismatch(fid.dim(), x0.size(), "run: x0 vs fidelity");
  if (x0.size() != den.dim()) throw DimensionMismatch(den.dim(), x0.size(), "run: x0 vs denoiser");
  x0.require_finite("run: x0");
  if (opts.ground_truth) require_same_dim(*opts.ground_truth, x0, "run: ground truth");
  if (!fid.differentiable() && (cfg.method == Method::Snore || cfg.method == Method::Red ||
                                cfg.method == Method::Pnp)) {
    throw std::logic_error("non-differentiable fidelity");
  }

  RunTrace trace;
  trace.meta.seed = cfg.seed;
  trace.meta.run = opts.run;
  trace.meta.config_hash = opts.config_hash;
  trace.meta.method = to_string(cfg.method);
  trace.meta.notes = opts.notes;

  const std::uint64_t n = cfg.iters;
  std::vector<StageParams> plan;
  if (cfg.anneal && n > 0) plan = annealing_plan(*cfg.anneal, n);
  const auto params = [&](std::uint64_t k) {
    if (plan.empty()) return StageParams{cfg.lambda, cfg.sigma};
    return plan[std::min<std::uint64_t>(k, n - 1)];
  };

  const RngStream root(cfg.seed);
  const RngStream solver_stream = root.derive("solver").with_run(opts.run);
  const RngStream telemetry_stream = root.derive("telemetry").with_run(opts.run);

  SolverState state{x0, 0, Vector()};
  trace.records.reserve(static_cast<std::size_t>(n / cfg.telemetry.record_every + 2));
  for (std::uint64_t k = 0;; ++k) {
    const StageParams p = params(k);
    TraceRecord rec;
    rec.k = k;
    rec.delta = cfg.schedule.value(k);
    rec.lambda = p.lambda;
    rec.sigma = p.sigma;
    const bool record = k % cfg.telemetry.record_every == 0 || k == n;
    if (record) {
      const auto t = objective_telemetry(fid, den, p.lambda, p.sigma, state.x, cfg.telemetry,
                                         telemetry_stream.at(k));
      rec.f_est = t.f_value;
      rec.f_stderr = t.f_stderr;
      rec.grad_sq_est = t.grad_sq;
      rec.grad_sq_stderr = t.grad_sq_stderr;
      if (opts.ground_truth) rec.psnr = psnr(state.x, *opts.ground_truth);
    }
    if (k == n) {
      rec.residual = 0.0;
      trace.records.push_back(rec);
      break;
    }

    SolverState next;
    bool finite = true;
    try {
      switch (cfg.method) {
        case Method::SnoreProx:
          next = snore_prox_step(state, fid, den, rec.delta, p.lambda, p.sigma, solver_stream.at(k));
          break;
        case Method::Snore:
          next = snore_step(state, fid, den, rec.delta, p.lambda, p.sigma, solver_stream.at(k));
          break;
        case Method::Red:
          next = red_step(state, fid, den, rec.delta, p.lambda, p.sigma);
          break;
        case Method::RedProx:
          next = red_prox_step(state, fid, den, rec.delta, p.lambda, p.sigma);
          break;
        case Method::Pnp:
          next = pnp_step(state, fid, den, rec.delta, p.sigma);
          break;
      }
      finite = next.x.all_finite();
    } catch (const NonFiniteError&) {
      finite = false;
    }

    if (!finite) {
      std::ostringstream note;
      note << "aborted: non-finite iterate after step k=" << k << " (delta=" << format_double(rec.delta)
           << ", lambda=" << format_double(p.lambda) << ", sigma=" << format_double(p.sigma) << ")";
      trace.meta.aborted = true;
      trace.meta.notes.push_back(note.str());
      rec.residual = std::numeric_limits<double>::infinity();
      trace.records.push_back(rec);
      break;
    }
    rec.residual = (next.x - state.x).norm();
    if (record) trace.records.push_back(rec);
    state = std::move(next);
  }
  trace.final_x = std::move(state.x);
  return trace;
}

std::vector<RunTrace> run_ensemble(const SolverConfig& cfg, const Fidelity& fid, const Denoiser& den,
                                   const Vector& x0, std::size_t n_runs, std::size_t threads,
                                   const RunOptions& opts) {
  std::vector<RunTrace> out(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t r = next++; r < n_runs; r = next++) {
      try {
        RunOptions o = opts;
        o.run = r;
        out[r] = run(cfg, fid, den, x0, o);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n_runs, 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace snorelab
