#include <cmath>

#include "doctest.h"
#include "snorelab/oracles/oracles.hpp"
#include "snorelab/regularizer/regularizer.hpp"

using namespace snorelab;

namespace {

const GmmDenoiser& gauss1() {
  static const GmmDenoiser d(GmmPrior::gaussian(Vector{0.0}, 1.0));
  return d;
}

const GmmDenoiser& mix1() {
  static const GmmDenoiser d(GmmPrior({0.5, 0.5}, {Vector{-1.0}, Vector{1.0}}, {0.25, 0.25}));
  return d;
}

}  // namespace

TEST_CASE("single-sample gradient") {
  CHECK(stoch_grad_g_with(gauss1(), 1.0, Vector{1.0}, Vector{0.0})[0] == doctest::Approx(0.5));
  CHECK(stoch_grad_g_with(gauss1(), 1.0, Vector{0.0}, Vector{0.0})[0] == 0.0);
  const auto sg = stoch_grad_g(gauss1(), 1.0, Vector{1.0}, RngStream(4));
  CHECK(sg.grad[0] == stoch_grad_g_with(gauss1(), 1.0, Vector{1.0}, sg.z)[0]);
}

TEST_CASE("replay average is unbiased") {
  const Vector x{0.3};
  const auto est = mc_grad_g(mix1(), 0.5, x, 10000, RngStream(8));
  CHECK(std::abs(est.value[0] - exact_grad_g(mix1(), 0.5, x)[0]) <= 4.0 * est.std_error);
}

TEST_CASE("exact gradient") {
  CHECK(exact_grad_g(gauss1(), 1.0, Vector{2.0})[0] == doctest::Approx(1.0));
  CHECK(exact_grad_g(gauss1(), 1.0, Vector{0.0})[0] == 0.0);
  // Quadrature route against a 1e6-sample Monte Carlo.
  const Vector x{0.3};
  const auto mc = mc_grad_g(mix1(), 0.5, x, 1000000, RngStream(21));
  CHECK(std::abs(exact_grad_g(mix1(), 0.5, x)[0] - mc.value[0]) <= 4.0 * mc.std_error);
}

TEST_CASE("exact gradient is unavailable for large K>1 problems") {
  const GmmDenoiser big(GmmPrior({0.5, 0.5}, {Vector(5, 0.0), Vector(5, 1.0)}, {0.1, 0.1}));
  CHECK_FALSE(has_exact_grad_g(big, 0.5, 5));
  CHECK_THROWS_AS(exact_grad_g(big, 0.5, Vector(5, 0.2)), std::domain_error);
  CHECK(has_exact_grad_g(gauss1(), 1.0, 1));
}

TEST_CASE("mc gradient standard error") {
  const auto est = mc_grad_g(gauss1(), 1.0, Vector{2.0}, 200000, RngStream(2));
  CHECK(std::abs(est.value[0] - 1.0) <= 4.0 * est.std_error);

  const auto dup = mc_grad_g_with(mix1(), 0.5, Vector{0.3}, {Vector{0.7}, Vector{0.7}});
  CHECK(dup.std_error == 0.0);

  // Doubling n halves the standard error (ratio 1/sqrt(2) ~ 0.707).
  double ratio = 0.0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const RngStream s = RngStream(31).with_run(r);
    ratio += mc_grad_g(mix1(), 0.5, Vector{0.3}, 2000, s).std_error /
             mc_grad_g(mix1(), 0.5, Vector{0.3}, 1000, s.derive("double")).std_error;
  }
  CHECK(std::abs(ratio / 50.0 - 1.0 / std::sqrt(2.0)) < 0.2 / std::sqrt(2.0));
}

TEST_CASE("value of g_sigma") {
  const Vector x{0.8};
  const auto closed = exact_value_g(gauss1(), 1.0, x);
  REQUIRE(closed.has_value());
  const auto mc = mc_value_g(gauss1(), 1.0, x, 100000, RngStream(12));
  CHECK(std::abs(*closed - mc.value) <= 4.0 * mc.std_error);

  const double at_mean = *exact_value_g(gauss1(), 1.0, Vector{0.0});
  for (double v : {-2.0, -0.1, 0.1, 3.0}) CHECK(at_mean <= *exact_value_g(gauss1(), 1.0, Vector{v}));

  const GmmDenoiser moved(mix1().prior().translated(Vector{1.5}));
  CHECK(*exact_value_g(moved, 0.5, Vector{1.8}) == doctest::Approx(*exact_value_g(mix1(), 0.5, Vector{0.3})));
}

TEST_CASE("gradient of g_sigma matches finite differences of its value") {
  const GmmDenoiser d(GmmPrior({0.3, 0.7}, {Vector{-1.0, 0.5}, Vector{2.0, 0.0}}, {0.2, 0.6}));
  const Vector x{0.4, -0.2};
  const Vector fd = oracles::fd_gradient([&](const Vector& v) { return *exact_value_g(d, 0.7, v); }, x);
  const Vector g = exact_grad_g(d, 0.7, x);
  for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(fd[j] - g[j]) < 1e-6);
}

TEST_CASE("bias second moment") {
  const auto rep = bias_second_moment(gauss1(), 1.0, Vector{0.7}, 10000, RngStream(5));
  CHECK(rep.bound == doctest::Approx(0.5));
  CHECK(rep.estimate <= rep.bound + 4.0 * rep.std_error);
  CHECK_FALSE(rep.violated);

  const ConstantDenoiser c(Vector{0.25});
  const auto zero = bias_second_moment(c, 1.0, Vector{0.7}, 1000, RngStream(5));
  CHECK(zero.estimate == 0.0);

  const GmmDenoiser moved(mix1().prior().translated(Vector{2.0}));
  const auto a = bias_second_moment(mix1(), 0.5, Vector{0.3}, 2000, RngStream(6));
  const auto b = bias_second_moment(moved, 0.5, Vector{2.3}, 2000, RngStream(6));
  CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-9));
}
