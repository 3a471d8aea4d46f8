#include "snorelab/theory/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "snorelab/core/rng.hpp"

namespace snorelab {

namespace {

struct EnsembleShape {
  std::uint64_t n = 0;  // last iteration index
  std::size_t runs = 0;
};

EnsembleShape check_ensemble(const std::vector<RunTrace>& traces, const char* who) {
  const std::string where(who);
  if (traces.empty()) throw std::invalid_argument(where + ": empty ensemble");
  const RunTrace& ref = traces.front();
  if (ref.records.empty()) throw std::invalid_argument(where + ": trace without records");
  for (const auto& t : traces) {
    if (t.meta.aborted) throw std::invalid_argument(where + ": ensemble contains an aborted run");
    if (t.meta.config_hash != ref.meta.config_hash || t.meta.method != ref.meta.method ||
        t.meta.seed != ref.meta.seed || t.records.size() != ref.records.size()) {
      throw std::invalid_argument(where + ": traces come from mixed configurations");
    }
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      const auto& r = t.records[k];
      const auto& q = ref.records[k];
      if (r.k != k) throw std::invalid_argument(where + ": traces must record every iteration");
      if (r.delta != q.delta || r.lambda != q.lambda || r.sigma != q.sigma) {
        throw std::invalid_argument(where + ": traces come from mixed configurations");
      }
    }
  }
  return {ref.records.back().k, traces.size()};
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

double f_gap(const std::vector<RunTrace>& traces, const TheoryBounds& tb) {
  if (!tb.F_star) throw std::invalid_argument("bound check requires F*");
  const double f0 = traces.front().records.front().f_est;
  return f0 - *tb.F_star;
}

void finish(BoundReport& r, const TheoryBounds& tb) {
  r.margin = r.rhs - r.lhs;
  r.verdict = decide(r.lhs, r.rhs, r.mc_stderr, tb.F_star_exact);
  r.details.insert(r.details.end(), {{"L", tb.L},
                                     {"rho", tb.rho},
                                     {"M", tb.M},
                                     {"lambda", tb.lambda},
                                     {"sigma", tb.sigma},
                                     {"delta0", tb.delta0},
                                     {"delta_max", tb.delta_max},
                                     {"L_F", tb.L_F},
                                     {"M_bar", tb.M_bar},
                                     {"A1", tb.A1},
                                     {"B1", tb.B1},
                                     {"A2", tb.A2},
                                     {"B2", tb.B2},
                                     {"A3", tb.A3},
                                     {"B3", tb.B3},
                                     {"F_star", tb.F_star.value_or(std::numeric_limits<double>::quiet_NaN())}});
}

// Seed mean and standard error of ||grad F(x_k)||^2 at each k. The standard
// error folds the across-run spread with the per-record MC error.
void grad_sq_profile(const std::vector<RunTrace>& traces, std::vector<double>& mean, std::vector<double>& se) {
  const std::size_t n = traces.front().records.size();
  const double r = static_cast<double>(traces.size());
  mean.assign(n, 0.0);
  se.assign(n, 0.0);
  std::vector<double> col(traces.size());
  for (std::size_t k = 0; k < n; ++k) {
    double mc = 0.0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      col[i] = traces[i].records[k].grad_sq_est;
      mc += traces[i].records[k].grad_sq_stderr * traces[i].records[k].grad_sq_stderr;
    }
    mean[k] = mean_of(col);
    const double spread = stderr_of(col);
    se[k] = std::sqrt(spread * spread + mc / (r * r));
  }
}

}  // namespace

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

Verdict decide(double lhs, double rhs, double se, bool f_star_exact) {
  if (!std::isfinite(lhs) || !std::isfinite(rhs)) return f_star_exact ? Verdict::Violated : Verdict::Inconclusive;
  if (lhs <= rhs + 4.0 * se) return Verdict::Certified;
  if (lhs - 4.0 * se > rhs) return f_star_exact ? Verdict::Violated : Verdict::Inconclusive;
  return Verdict::Inconclusive;
}

double max_step(double lambda, double sigma, double L, double rho) {
  if (!(lambda >= 0.0) || !(sigma > 0.0)) throw std::invalid_argument("max_step: need lambda >= 0 and sigma > 0");
  if (!(L >= 0.0) || !(rho >= 0.0)) throw std::invalid_argument("max_step: L and rho must be non-negative");
  const double s2 = sigma * sigma;
  const double denom = lambda * (L + 1.0) + rho * s2;
  // lambda = 0 with a convex data term: no ceiling.
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return s2 / denom;
}

TheoryBounds constants(double lambda, double sigma, double L, double rho, double M, double delta0) {
  if (!(M >= 0.0)) throw std::invalid_argument("constants: M must be non-negative");
  if (!(delta0 > 0.0)) throw std::invalid_argument("constants: delta0 must be positive");
  TheoryBounds tb;
  tb.L = L;
  tb.rho = rho;
  tb.M = M;
  tb.lambda = lambda;
  tb.sigma = sigma;
  tb.delta0 = delta0;
  tb.delta_max = max_step(lambda, sigma, L, rho);
  if (delta0 > tb.delta_max) {
    throw StepRegimeError("step exceeds Lemma-2 regime: delta0 = " + format_double(delta0) +
                          " > sigma^2 / (lambda (L + 1) + rho sigma^2) = " + format_double(tb.delta_max));
  }
  const double s2 = sigma * sigma;
  tb.M_bar = std::max(rho, M);
  tb.L_F = M + lambda * (L + 1.0) / s2;
  const double curv = tb.L_F + delta0 * tb.M_bar * tb.M_bar;
  const double noise = 4.0 * lambda * lambda * L * L / s2;
  tb.A1 = 1.0 + delta0 * curv;
  tb.B1 = noise * curv / (2.0 * (1.0 - delta0 * rho));
  tb.A2 = 2.0 * tb.A1;
  tb.B2 = noise * curv / (1.0 - delta0 * rho);
  tb.A3 = tb.A2;
  tb.B3 = tb.B2;
  return tb;
}

std::optional<Vector> analytic_minimizer(const Fidelity& fid, const GmmPrior& prior, double lambda, double sigma) {
  if (!prior.is_gaussian()) return std::nullopt;
  if (fid.kind() != FidelityKind::DenoiseQuadratic && fid.kind() != FidelityKind::InpaintNoisy) return std::nullopt;
  require_same_dim(fid.y(), prior.mean(0), "analytic_minimizer");
  // grad F = A^T (A x - y) / sigma_y^2 + lambda (x - mu) / s with A diagonal.
  const double sy2 = fid.sigma_y() * fid.sigma_y();
  const double s = prior.variance(0) + sigma * sigma;
  const Vector& mu = prior.mean(0);
  Vector x(fid.dim(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = fid.kind() == FidelityKind::DenoiseQuadratic ? 1.0 : fid.mask()[i];
    const double h = a / sy2 + lambda / s;
    if (!(h > 0.0)) return std::nullopt;
    x[i] = (a * fid.y()[i] / sy2 + lambda * mu[i] / s) / h;
  }
  if (fid.y().shape()) x.set_shape(*fid.y().shape());
  return x;
}

std::optional<double> analytic_minimum(const Fidelity& fid, const GmmPrior& prior, double lambda, double sigma) {
  const auto x = analytic_minimizer(fid, prior, lambda, sigma);
  if (!x) return std::nullopt;
  const GmmDenoiser den(prior);
  return fid.eval(*x) + lambda * *den.expected_potential(*x, sigma) / (sigma * sigma);
}

BoundReport check_residual_bound(const std::vector<RunTrace>& traces, const TheoryBounds& tb,
                                 const StepSchedule& schedule) {
  const auto shape = check_ensemble(traces, "check_residual_bound");
  BoundReport rep;
  rep.name = "residual-sum";
  std::vector<double> sums;
  sums.reserve(traces.size());
  for (const auto& t : traces) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < t.records.size(); ++k) s += t.records[k].residual * t.records[k].residual;
    sums.push_back(s);
  }
  rep.lhs = mean_of(sums);
  rep.mc_stderr = stderr_of(sums);
  double sq = 0.0;
  for (std::uint64_t k = 0; k <= shape.n; ++k) sq += schedule.value(k) * schedule.value(k);
  const double gap = f_gap(traces, tb);
  rep.rhs = 2.0 * tb.delta0 * gap +
            4.0 * tb.lambda * tb.lambda * tb.L * tb.L / (tb.sigma * tb.sigma * (1.0 - tb.delta0 * tb.rho)) * sq;
  rep.details = {{"N", static_cast<double>(shape.n)},
                 {"runs", static_cast<double>(shape.runs)},
                 {"F0_minus_Fstar", gap},
                 {"sum_delta_sq", sq}};
  finish(rep, tb);
  return rep;
}

BoundReport check_constant_step_bound(const std::vector<RunTrace>& traces, const TheoryBounds& tb, double delta,
                                      std::uint64_t n) {
  const auto shape = check_ensemble(traces, "check_constant_step_bound");
  if (shape.n < n) throw std::invalid_argument("check_constant_step_bound: traces shorter than N");
  for (std::uint64_t k = 0; k <= n; ++k) {
    if (traces.front().records[k].delta != delta) {
      throw std::invalid_argument("check_constant_step_bound: requires a constant step schedule");
    }
  }
  BoundReport rep;
  rep.name = "constant-step";
  const double count = static_cast<double>(n + 1);
  std::vector<double> avg;
  double mc = 0.0;
  for (const auto& t : traces) {
    double s = 0.0, e = 0.0;
    for (std::uint64_t k = 0; k <= n; ++k) {
      s += t.records[k].grad_sq_est;
      e += t.records[k].grad_sq_stderr;
    }
    avg.push_back(s / count);
    mc += (e / count) * (e / count);
  }
  const double r = static_cast<double>(traces.size());
  rep.lhs = mean_of(avg);
  const double spread = stderr_of(avg);
  rep.mc_stderr = std::sqrt(spread * spread + mc / (r * r));
  const double gap = f_gap(traces, tb);
  rep.rhs = tb.A2 / (delta * count) * gap + tb.B2 * delta;
  rep.details = {{"N", static_cast<double>(n)},
                 {"runs", r},
                 {"delta", delta},
                 {"F0_minus_Fstar", gap},
                 {"asymptote_B2_delta", tb.B2 * delta}};
  finish(rep, tb);
  return rep;
}

double weighted_grad_sum(const RunTrace& trace, std::uint64_t n) {
  if (trace.records.size() <= n) throw std::invalid_argument("weighted_grad_sum: trace shorter than N");
  double s = 0.0;
  for (std::uint64_t k = 0; k <= n; ++k) s += trace.records[k].delta * trace.records[k].grad_sq_est;
  return s;
}

DecreasingReport check_decreasing_bound(const std::vector<RunTrace>& traces, const TheoryBounds& tb,
                                        const StepSchedule& schedule, std::uint64_t n) {
  if (schedule.is_constant()) {
    throw std::invalid_argument("check_decreasing_bound: requires a decreasing step schedule, got constant");
  }
  const auto shape = check_ensemble(traces, "check_decreasing_bound");
  if (shape.n < n) throw std::invalid_argument("check_decreasing_bound: traces shorter than N");
  for (std::uint64_t k = 1; k <= n; ++k) {
    if (schedule.value(k) > schedule.value(k - 1)) {
      throw std::invalid_argument("check_decreasing_bound: step schedule is increasing");
    }
  }
  DecreasingReport out;
  BoundReport& rep = out.report;
  rep.name = "decreasing-step";

  std::vector<double> mean, se;
  grad_sq_profile(traces, mean, se);
  out.running_min.resize(n + 1);
  std::uint64_t arg = 0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    if (mean[k] < mean[arg]) arg = k;
    out.running_min[k] = mean[arg];
  }
  rep.lhs = mean[arg];
  rep.mc_stderr = se[arg];

  double sum = 0.0, sq = 0.0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    const double d = schedule.value(k);
    sum += d;
    sq += d * d;
  }
  const double gap = f_gap(traces, tb);
  rep.rhs = tb.A3 / sum * gap + tb.B3 * sq / sum;
  for (const auto& t : traces) out.partial_sums.push_back(weighted_grad_sum(t, n));
  rep.details = {{"N", static_cast<double>(n)},
                 {"runs", static_cast<double>(traces.size())},
                 {"argmin_k", static_cast<double>(arg)},
                 {"sum_delta", sum},
                 {"sum_delta_sq", sq},
                 {"F0_minus_Fstar", gap}};
  finish(rep, tb);
  return out;
}

BoundReport check_summability(const std::vector<RunTrace>& traces, std::uint64_t n, double tolerance) {
  const auto shape = check_ensemble(traces, "check_summability");
  if (shape.n <= n || n == 0) throw std::invalid_argument("check_summability: traces must extend past N");
  BoundReport rep;
  rep.name = "summability";
  double worst = 0.0, mean_growth = 0.0;
  for (const auto& t : traces) {
    const double a = weighted_grad_sum(t, n);
    const double b = weighted_grad_sum(t, shape.n);
    const double growth = a > 0.0 ? (b - a) / a : (b > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    worst = std::max(worst, growth);
    mean_growth += growth / static_cast<double>(traces.size());
  }
  rep.lhs = worst;
  rep.rhs = tolerance;
  rep.margin = rep.rhs - rep.lhs;
  rep.verdict = decide(rep.lhs, rep.rhs, 0.0);
  rep.details = {{"N", static_cast<double>(n)},
                 {"N_end", static_cast<double>(shape.n)},
                 {"runs", static_cast<double>(traces.size())},
                 {"mean_growth", mean_growth}};
  return rep;
}

BoundReport check_residual_decay(const std::vector<RunTrace>& traces, double window, double ratio) {
  const auto shape = check_ensemble(traces, "check_residual_decay");
  if (!(window > 0.0 && window <= 0.5)) throw std::invalid_argument("check_residual_decay: window must lie in (0, 1/2]");
  const auto steps = shape.n;  // residuals exist for k = 0..N-1
  const auto w = static_cast<std::uint64_t>(std::floor(window * static_cast<double>(steps)));
  if (w == 0) throw std::invalid_argument("check_residual_decay: traces too short for the window");
  double first = 0.0, last = 0.0;
  for (const auto& t : traces) {
    for (std::uint64_t k = 0; k < w; ++k) first += t.records[k].residual;
    for (std::uint64_t k = steps - w; k < steps; ++k) last += t.records[k].residual;
  }
  const double denom = static_cast<double>(w * traces.size());
  first /= denom;
  last /= denom;
  BoundReport rep;
  rep.name = "residual-decay";
  rep.lhs = last;
  rep.rhs = ratio * first;
  rep.margin = rep.rhs - rep.lhs;
  rep.verdict = decide(rep.lhs, rep.rhs, 0.0);
  rep.details = {{"N", static_cast<double>(steps)},
                 {"window", static_cast<double>(w)},
                 {"first_mean", first},
                 {"last_mean", last},
                 {"ratio", first > 0.0 ? last / first : 0.0}};
  return rep;
}

RateFit rate_slope(const std::vector<RunTrace>& traces, double alpha) {
  if (!(alpha > 0.5 && alpha < 1.0)) throw std::invalid_argument("rate_slope: alpha must lie in (1/2, 1)");
  const auto shape = check_ensemble(traces, "rate_slope");
  const auto& recs = traces.front().records;
  if (recs.size() < 10) throw std::invalid_argument("rate_slope: fewer than 10 trace points");
  if (recs[0].delta == recs.back().delta) throw std::invalid_argument("rate_slope: requires a decreasing schedule");

  std::vector<double> mean, se;
  grad_sq_profile(traces, mean, se);
  std::vector<double> running(mean.size());
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mean.size(); ++k) running[k] = m = std::min(m, mean[k]);

  // Log-spaced sample of N in [N_max/10, N_max] so each part of the decade
  // weighs the same in the fit.
  const double n_max = static_cast<double>(shape.n);
  const double n_min = std::max(1.0, n_max / 10.0);
  std::vector<std::uint64_t> ns;
  constexpr int kPoints = 100;
  for (int i = 0; i <= kPoints; ++i) {
    const double v = n_min * std::pow(n_max / n_min, static_cast<double>(i) / kPoints);
    const auto k = static_cast<std::uint64_t>(std::llround(v));
    if (ns.empty() || ns.back() != k) ns.push_back(std::min<std::uint64_t>(k, shape.n));
  }
  if (ns.size() < 10) throw std::invalid_argument("rate_slope: fewer than 10 trace points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (auto k : ns) {
    if (!(running[k] > 0.0)) throw std::invalid_argument("rate_slope: non-positive running minimum");
    const double x = std::log(static_cast<double>(k)), y = std::log(running[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double p = static_cast<double>(ns.size());
  RateFit fit;
  fit.slope = (p * sxy - sx * sy) / (p * sxx - sx * sx);
  fit.expected = alpha - 1.0;
  fit.points = ns.size();
  return fit;
}

CounterexampleReport counterexample(double a, double lambda_g, double delta, double sigma_noise, std::uint64_t iters,
                                    std::size_t seeds, std::uint64_t seed, std::size_t dim, double x0) {
  if (!(a > 0.0) || !(lambda_g > 0.0) || !(delta > 0.0) || !(sigma_noise >= 0.0)) {
    throw std::invalid_argument("counterexample: a, lambda_g, delta must be positive and sigma_noise non-negative");
  }
  if (seeds < 2) throw std::invalid_argument("counterexample: at least 2 seeds required");
  if (dim == 0) throw std::invalid_argument("counterexample: dim must be positive");
  CounterexampleReport rep;
  rep.a = a;
  rep.lambda_g = lambda_g;
  rep.delta = delta;
  rep.sigma_noise = sigma_noise;
  rep.iters = iters;
  rep.seeds = seeds;
  rep.dim = dim;
  rep.x0 = x0;
  rep.deterministic = sigma_noise == 0.0;
  rep.lower_bound = sigma_noise * sigma_noise / 4.0;

  const double c = a + lambda_g;
  const double contraction = (1.0 - delta * lambda_g) / (1.0 + delta * a);
  const double kick = delta * sigma_noise / (1.0 + delta * a);
  // Stationary variance of the AR(1) recursion, per coordinate.
  rep.steady_closed_form = static_cast<double>(dim) * c * c * kick * kick / (1.0 - contraction * contraction);

  std::vector<std::vector<double>> g(seeds, std::vector<double>(iters + 1));
  const RngStream base = RngStream(seed).derive("counterexample");
  for (std::size_t s = 0; s < seeds; ++s) {
    Vector x(dim, x0);
    const RngStream stream = base.with_run(s);
    for (std::uint64_t k = 0;; ++k) {
      g[s][k] = c * c * x.squared_norm();
      if (k == iters) break;
      const Vector z = gaussian_draw(stream.at(k), dim);
      for (std::size_t j = 0; j < dim; ++j) x[j] = (x[j] - delta * lambda_g * x[j] - delta * sigma_noise * z[j]) /
                                                   (1.0 + delta * a);
    }
  }

  std::vector<double> col(seeds);
  rep.min_mean_grad_sq = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k <= iters; ++k) {
    for (std::size_t s = 0; s < seeds; ++s) col[s] = g[s][k];
    const double m = mean_of(col);
    if (m < rep.min_mean_grad_sq) {
      rep.min_mean_grad_sq = m;
      rep.argmin_k = k;
      rep.min_stderr = stderr_of(col);
    }
  }

  const std::uint64_t start = iters / 2;
  for (std::size_t s = 0; s < seeds; ++s) {
    double acc = 0.0;
    for (std::uint64_t k = start; k <= iters; ++k) acc += g[s][k];
    col[s] = acc / static_cast<double>(iters - start + 1);
  }
  rep.steady_empirical = mean_of(col);
  rep.steady_stderr = stderr_of(col);
  rep.floor_respected = rep.min_mean_grad_sq >= rep.lower_bound;
  rep.steady_match = std::abs(rep.steady_empirical - rep.steady_closed_form) <= 3.0 * rep.steady_stderr;
  return rep;
}

}  // namespace snorelab
