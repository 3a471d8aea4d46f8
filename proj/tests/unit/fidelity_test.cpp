#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "snorelab/fidelity/fidelity.hpp"
#include "snorelab/oracles/oracles.hpp"

using namespace snorelab;

TEST_CASE("kind names round trip") {
  for (auto k : {FidelityKind::InpaintNoisy, FidelityKind::InpaintNoiseless, FidelityKind::DeblurCirculant,
                 FidelityKind::DenoiseQuadratic}) {
    CHECK(parse_fidelity_kind(to_string(k)) == k);
  }
  CHECK(parse_fidelity_kind("inpaint") == FidelityKind::InpaintNoisy);
  CHECK_THROWS(parse_fidelity_kind("superres"));
}

TEST_CASE("construction checks") {
  CHECK_THROWS(Fidelity::denoise_quadratic(Vector{0.0}, 0.0));
  CHECK_THROWS(Fidelity::inpaint(Vector{0.5}, Vector{0.0}, 1.0));
  CHECK_THROWS(Fidelity::deblur(BlurKernel{Shape{1, 2}, {0.5, 0.6}}, Vector({0, 0, 0, 0}, Shape{2, 2}), 1.0));
}

TEST_CASE("eval") {
  const auto f = Fidelity::denoise_quadratic(Vector{0.0}, 1.0);
  CHECK(f.eval(Vector{2.0}) == 2.0);
  CHECK(f.eval(Vector{0.0}) == 0.0);
  const auto m = Fidelity::inpaint(Vector{1.0, 0.0, 1.0}, Vector{0.2, 0.0, 0.4}, 0.1);
  CHECK(m.eval(Vector{0.2, 5.0, 0.4}) == 0.0);
  CHECK(m.eval(Vector{0.3, 1.0, 0.4}) == m.eval(Vector{0.3, -7.0, 0.4}));
  const auto n = Fidelity::inpaint(Vector{1.0, 0.0}, Vector{0.2, 0.0}, 0.0);
  CHECK(n.eval(Vector{0.2, 3.0}) == 0.0);
  CHECK(std::isinf(n.eval(Vector{0.3, 3.0})));
}

TEST_CASE("gradient") {
  const auto f = Fidelity::denoise_quadratic(Vector{0.0}, 1.0);
  CHECK(f.grad(Vector{2.0})[0] == 2.0);
  CHECK(f.grad(Vector{0.0})[0] == 0.0);
  CHECK_THROWS_WITH_AS(Fidelity::inpaint(Vector{1.0}, Vector{0.0}, 0.0).grad(Vector{1.0}),
                       "non-differentiable fidelity", std::logic_error);

  const Vector y({0.1, 0.5, 0.9, 0.3, 0.2, 0.7, 0.4, 0.6, 0.8}, Shape{3, 3});
  const std::vector<Fidelity> fids = {
      Fidelity::denoise_quadratic(y, 0.3),
      Fidelity::inpaint(Vector({1, 0, 1, 1, 0, 0, 1, 0, 1}, Shape{3, 3}), y, 0.3),
      Fidelity::deblur(BlurKernel::uniform(3), y, 0.3),
  };
  for (const auto& f : fids) {
    for (std::uint64_t i = 0; i < 20; ++i) {
      Vector x = gaussian_draw(RngStream(77).with_sample(i), 9);
      x.set_shape(Shape{3, 3});
      const Vector fd = oracles::fd_gradient([&](const Vector& v) { return f.eval(v.with_shape(Shape{3, 3})); }, x);
      const Vector g = f.grad(x);
      for (std::size_t j = 0; j < 9; ++j) CHECK(std::abs(fd[j] - g[j]) < 1e-6);
    }
  }
}

TEST_CASE("prox closed forms") {
  const auto n = Fidelity::inpaint(Vector{1.0, 0.0}, Vector{0.25, 0.0}, 0.0);
  const Vector p = n.prox(0.7, Vector{3.0, -2.0});
  CHECK(p[0] == 0.25);
  CHECK(p[1] == -2.0);

  const auto noisy = Fidelity::inpaint(Vector{1.0}, Vector{0.0}, 1.0);
  CHECK(noisy.prox(1.0, Vector{2.0})[0] == doctest::Approx(1.0).epsilon(1e-15));

  const auto q = Fidelity::denoise_quadratic(Vector{0.0}, 1.0);
  CHECK(q.prox(0.5, Vector{0.75})[0] == doctest::Approx(0.5));
}

TEST_CASE("deblur prox solves the normal equations") {
  const Vector y({0.1, 0.5, 0.9, 0.3, 0.2, 0.7, 0.4, 0.6, 0.8, 0.1, 0.3, 0.5}, Shape{3, 4});
  const auto f = Fidelity::deblur(BlurKernel::uniform(3), y, 0.2);
  Vector x = gaussian_draw(RngStream(4), 12);
  x.set_shape(Shape{3, 4});
  const double delta = 0.3;
  const Vector z = f.prox(delta, x);
  // Optimality: (z - x) / delta + grad f(z) = 0.
  Vector r = (z - x) / delta;
  r += f.grad(z);
  CHECK(r.max_abs() < 1e-10);
}

TEST_CASE("fidelity constants") {
  const auto in = Fidelity::inpaint(Vector{1.0, 0.0, 1.0}, Vector{0.0, 0.0, 0.0}, 5.0 / 255.0);
  CHECK(in.constants().M == doctest::Approx(2601.0).epsilon(1e-12));
  CHECK(in.constants().rho == 0.0);
  const auto dq = Fidelity::denoise_quadratic(Vector{0.0, 1.0}, 1.0);
  CHECK(dq.constants().M == 1.0);
  CHECK(dq.constants().rho == 0.0);
  CHECK_FALSE(Fidelity::inpaint(Vector{1.0}, Vector{0.0}, 0.0).constants().differentiable);
}

TEST_CASE("deblur smoothness against explicit eigenvalues") {
  const Shape s{4, 5};
  const double sy = 0.5;
  const auto f = Fidelity::deblur(BlurKernel::uniform(3), Vector(std::vector<double>(20, 0.0), s), sy);
  Eigen::MatrixXd A(20, 20);
  for (std::size_t j = 0; j < 20; ++j) {
    Vector e(std::vector<double>(20, 0.0), s);
    e[j] = 1.0;
    const Vector col = f.forward(e);
    for (std::size_t i = 0; i < 20; ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  const Eigen::MatrixXd H = A.transpose() * A / (sy * sy);
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().maxCoeff();
  CHECK(f.constants().M == doctest::Approx(top).epsilon(1e-10));
  CHECK(f.constants().M <= 1.0 / (sy * sy) + 1e-12);
  // Adjoint is the transpose.
  const Vector u = gaussian_draw(RngStream(1), 20).with_shape(s), v = gaussian_draw(RngStream(2), 20).with_shape(s);
  CHECK(f.forward(u).dot(v) == doctest::Approx(u.dot(f.adjoint(v))).epsilon(1e-12));
}

TEST_CASE("degrade") {
  const Vector x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  FidelitySpec clean;
  clean.kind = FidelityKind::InpaintNoiseless;
  clean.sigma_y = 0.0;
  clean.mask = Vector(6, 1.0);
  CHECK(degrade(clean, x, RngStream(1)).y() == x);

  for (std::size_t d : {7u, 10u, 1024u}) {
    const Vector m = random_mask(d, 0.5, RngStream(d));
    CHECK(m.sum() == static_cast<double>(d / 2));
  }

  FidelitySpec noisy;
  noisy.kind = FidelityKind::DenoiseQuadratic;
  noisy.sigma_y = 0.3;
  const Vector truth(10, 0.5);
  double power = 0.0;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const auto f = degrade(noisy, truth, RngStream(9).with_run(r));
    power += (f.y() - truth).squared_norm() / 10.0;
  }
  CHECK(std::abs(power / 1000.0 - 0.09) < 0.009);
}
