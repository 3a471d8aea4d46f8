#include <cmath>

#include "doctest.h"
#include "snorelab/solvers/solvers.hpp"
#include "snorelab/theory/theory.hpp"

using namespace snorelab;

namespace {

struct Certified {
  Fidelity fid = Fidelity::denoise_quadratic(Vector{1.0, -0.5, 0.25, 2.0}, 1.0);
  GmmDenoiser den{GmmPrior::gaussian(Vector(4, 0.0), 1.0)};
  double dmax = max_step(1.0, 1.0, 0.5, 0.0);

  std::vector<RunTrace> ensemble(const StepSchedule& s, std::uint64_t n, std::size_t runs) const {
    SolverConfig cfg;
    cfg.schedule = s;
    cfg.iters = n;
    return run_ensemble(cfg, fid, den, Vector(4, 3.0), runs, 1);
  }
  TheoryBounds bounds(double delta0) const {
    auto tb = constants(1.0, 1.0, 0.5, 0.0, 1.0, delta0);
    tb.F_star = analytic_minimum(fid, den.prior(), 1.0, 1.0);
    return tb;
  }
};

}  // namespace

TEST_CASE("step ceiling") {
  CHECK(max_step(1.0, 1.0, 1.0, 0.0) == doctest::Approx(0.5));
  CHECK(max_step(0.05, 8.0 / 255.0, 0.5, 0.0) == doctest::Approx(0.0131231577598359605).epsilon(1e-12));
  CHECK(max_step(1.0, 1.0, 1.0, 1e12) < 1e-11);
  CHECK(std::isinf(max_step(0.0, 1.0, 0.5, 0.0)));
  CHECK(max_step(0.0, 1.0, 0.5, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("bound constants") {
  const auto tb = constants(1.0, 1.0, 0.5, 0.0, 1.0, 2.0 / 3.0);
  CHECK(tb.L_F == doctest::Approx(2.5));
  CHECK(tb.A1 == doctest::Approx(28.0 / 9.0).epsilon(1e-14));
  CHECK(tb.B1 == doctest::Approx(19.0 / 12.0).epsilon(1e-14));
  CHECK(tb.A2 == 2.0 * tb.A1);
  CHECK(tb.A3 == 2.0 * tb.A1);
  CHECK(tb.B2 == 2.0 * tb.B1);
  CHECK(tb.B3 == tb.B2);
  CHECK_THROWS_WITH_AS(constants(1.0, 1.0, 0.5, 0.0, 1.0, 0.7), doctest::Contains("step exceeds"),
                       StepRegimeError);
}

TEST_CASE("verdict rule") {
  CHECK(decide(1.0, 1.0, 0.0) == Verdict::Certified);
  CHECK(decide(1.3, 1.0, 0.1) == Verdict::Certified);
  CHECK(decide(1.5, 1.0, 0.1) == Verdict::Violated);
  CHECK(decide(1.5, 1.0, 0.1, false) == Verdict::Inconclusive);
}

TEST_CASE("analytic minimiser is stationary") {
  const Certified c;
  const auto xs = analytic_minimizer(c.fid, c.den.prior(), 1.0, 1.0);
  REQUIRE(xs.has_value());
  const auto t = objective_telemetry(c.fid, c.den, 1.0, 1.0, *xs, {}, RngStream(0));
  CHECK(t.grad_sq < 1e-24);
  CHECK(t.f_value == doctest::Approx(*analytic_minimum(c.fid, c.den.prior(), 1.0, 1.0)).epsilon(1e-14));
  const GmmPrior mix({0.5, 0.5}, {Vector(4, 0.0), Vector(4, 1.0)}, {1.0, 1.0});
  CHECK_FALSE(analytic_minimizer(c.fid, mix, 1.0, 1.0).has_value());
}

TEST_CASE("residual bound") {
  // Zero-variance surrogate started at the minimiser: nothing moves.
  const Fidelity fid = Fidelity::denoise_quadratic(Vector{0.0, 0.0}, 1.0);
  const ConstantDenoiser zero(Vector(2, 0.0));
  SolverConfig cfg;
  cfg.iters = 20;
  cfg.schedule = StepSchedule::constant(0.2);
  const auto flat = run_ensemble(cfg, fid, zero, Vector(2, 0.0), 3, 1);
  auto tb = constants(1.0, 1.0, 0.0, 0.0, 1.0, 0.2);
  tb.F_star = 0.0;
  const auto rep0 = check_residual_bound(flat, tb, cfg.schedule);
  CHECK(rep0.lhs == 0.0);
  CHECK(rep0.verdict == Verdict::Certified);

  const Certified c;
  const auto s = StepSchedule::constant(c.dmax / 2);
  auto runs = c.ensemble(s, 500, 64);
  const auto rep = check_residual_bound(runs, c.bounds(c.dmax / 2), s);
  CHECK(rep.verdict == Verdict::Certified);

  const double inflate = std::sqrt(10.0 * rep.rhs / rep.lhs);
  for (auto& t : runs)
    for (auto& r : t.records) r.residual *= inflate;
  CHECK(check_residual_bound(runs, c.bounds(c.dmax / 2), s).verdict == Verdict::Violated);
}

TEST_CASE("constant-step bound") {
  const Certified c;
  const auto s = StepSchedule::constant(c.dmax / 2);
  const auto runs = c.ensemble(s, 500, 64);
  const auto tb = c.bounds(c.dmax / 2);
  const auto rep = check_constant_step_bound(runs, tb, c.dmax / 2, 500);
  CHECK(rep.verdict == Verdict::Certified);

  // rhs tends to B2 delta as N grows.
  const auto longer = c.ensemble(s, 20000, 2);
  const auto far = check_constant_step_bound(longer, tb, c.dmax / 2, 20000);
  CHECK(far.rhs - tb.B2 * c.dmax / 2 < 0.02 * far.rhs);

  // A smaller step gives a lower stationary level.
  const auto half = c.ensemble(StepSchedule::constant(c.dmax / 4), 500, 64);
  const auto level = [](const std::vector<RunTrace>& ens) {
    double m = 0.0;
    for (const auto& t : ens)
      for (std::size_t k = 400; k <= 500; ++k) m += t.records[k].grad_sq_est;
    return m;
  };
  CHECK(level(half) < level(runs));
}

TEST_CASE("decreasing-step bound") {
  const Certified c;
  const auto s = StepSchedule::power_decay(c.dmax, 0.75);
  const auto runs = c.ensemble(s, 4000, 16);
  std::vector<RunTrace> head;
  for (const auto& t : runs) head.push_back(t.truncated(2000));
  const auto out = check_decreasing_bound(head, c.bounds(c.dmax), s, 2000);
  CHECK(out.report.verdict == Verdict::Certified);
  for (std::size_t k = 1; k < out.running_min.size(); ++k) CHECK(out.running_min[k] <= out.running_min[k - 1]);
  CHECK(out.partial_sums.size() == 16);
  CHECK(check_summability(runs, 2000).verdict == Verdict::Certified);

  CHECK_THROWS(check_decreasing_bound(head, c.bounds(c.dmax), StepSchedule::constant(0.1), 2000));
}

TEST_CASE("rate slope preconditions") {
  const Certified c;
  const auto runs = c.ensemble(StepSchedule::power_decay(c.dmax, 0.6), 200, 2);
  CHECK(rate_slope(runs, 0.6).expected == doctest::Approx(-0.4));
  CHECK_THROWS(rate_slope(c.ensemble(StepSchedule::constant(0.1), 200, 2), 0.75));
}

TEST_CASE("ensemble consistency checks") {
  const Certified c;
  auto runs = c.ensemble(StepSchedule::constant(0.1), 20, 2);
  runs[1].meta.config_hash = "other";
  CHECK_THROWS_WITH(check_residual_bound(runs, c.bounds(0.1), StepSchedule::constant(0.1)),
                    doctest::Contains("mixed"));
}

TEST_CASE("counterexample") {
  const auto r = counterexample(1.0, 1.0, 0.1, 1.0, 4000, 256, 3);
  // Stationary second moment of the AR(1) recursion: (a + l) delta s^2 / (2 + delta (a - l)).
  CHECK(r.steady_closed_form == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.steady_match);
  CHECK(r.lower_bound == 0.25);

  const auto det = counterexample(1.0, 1.0, 0.1, 0.0, 2000, 4);
  CHECK(det.deterministic);
  CHECK(det.min_mean_grad_sq < 1e-20);
}
