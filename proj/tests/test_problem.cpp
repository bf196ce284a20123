#include <cmath>

#include "doctest.h"
#include "martnet/problem.hpp"
#include "martnet/rng.hpp"

using namespace martnet;

TEST_CASE("smooth benchmark terminal values") {
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 4, 1.0);
  const Vector zero = Vector::Zero(4);
  CHECK(spec.terminal(zero) == doctest::Approx(1.0 + std::log(0.5)).epsilon(1e-15));
  // |x|^2 = 1 makes g vanish exactly
  Vector e1 = Vector::Zero(4);
  e1[0] = 1.0;
  CHECK(smooth_terminal_g(e1) == 0.0);
}

TEST_CASE("oscillatory terminal at the origin is d-independent") {
  const double delta = 3.14159265358979323846 / 10.0;
  const double expected = std::sin(-0.5 * 3.14159265358979323846) + std::sin(1.0 / delta);
  for (const Index d : {1, 5, 11}) {
    const Vector zero = Vector::Zero(d);
    CHECK(oscillatory_terminal_g(zero) == doctest::Approx(expected).epsilon(1e-15));
  }
  CHECK(expected == doctest::Approx(-1.0415).epsilon(1e-3));
}

TEST_CASE("benchmark drift and diffusion") {
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 3, 1.0);
  const Vector x = Vector::Ones(3);
  CHECK(eval_drift(spec, 0.1, x, Vector::Zero(3)) == Vector::Zero(3));
  Vector e1 = Vector::Zero(3);
  e1[0] = 1.0;
  CHECK(eval_drift(spec, 0.1, x, e1) == 2.0 * e1);
  const Vector dif = eval_diffusion_apply(spec, 0.1, x, Vector::Zero(3), e1);
  CHECK(dif == std::sqrt(2.0) * e1);
}

TEST_CASE("benchmark drift is linear in the control") {
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 5, 1.0);
  RngStream rng(11);
  for (int i = 0; i < 20; ++i) {
    const Vector x = sample_gaussian(rng, 5);
    const Vector k = sample_gaussian(rng, 5);
    CHECK((eval_drift(spec, 0.3, x, Vector(2.0 * k)) - 2.0 * eval_drift(spec, 0.3, x, k))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("oscillatory terminal is bounded by 2") {
  RngStream rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vector x = 5.0 * sample_gaussian(rng, 7);
    CHECK(std::abs(oscillatory_terminal_g(x)) <= 2.0);
  }
}

TEST_CASE("smooth terminal attains its minimum at the origin") {
  RngStream rng(6);
  const double g0 = smooth_terminal_g(Vector::Zero(3));
  for (int i = 0; i < 200; ++i) {
    const Vector x = sample_gaussian(rng, 3);
    CHECK(smooth_terminal_g(x) >= g0);
  }
}

TEST_CASE("terminal gradients match finite differences") {
  RngStream rng(8);
  for (const auto variant : {BenchmarkVariant::Smooth, BenchmarkVariant::Oscillatory}) {
    const ProblemSpec spec = make_benchmark(variant, 4, 1.0);
    const Vector x = sample_gaussian(rng, 4);
    const Vector grad = spec.terminal_grad(x);
    for (Index i = 0; i < 4; ++i) {
      Vector xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      const double fd = (spec.terminal(xp) - spec.terminal(xm)) / 2e-6;
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("heat-sanity variant freezes control and cost") {
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::HeatSanity, 2, 1.0, 3.0);
  CHECK(spec.control_lo == Vector::Zero(2));
  CHECK(spec.control_hi == Vector::Zero(2));
  CHECK(spec.cost(0.2, Vector::Ones(2), Vector::Zero(2)) == 0.0);
  // terminal matches the smooth wrapper
  const Vector x = Vector::Ones(2);
  CHECK(spec.terminal(x) == 1.0 + smooth_terminal_g(x));
}

TEST_CASE("control_distance requires a general set and measures it") {
  ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 3, 1.0);
  CHECK_THROWS_AS(control_distance(spec, Vector::Zero(3)), std::logic_error);

  // unit-ball control set
  spec.general_set = true;
  spec.set_distance = [](const Vector& k) { return std::max(0.0, k.norm() - 1.0); };
  CHECK(control_distance(spec, Vector::Zero(3)) == 0.0);
  Vector far = Vector::Zero(3);
  far[0] = 2.0;
  CHECK(control_distance(spec, far) == doctest::Approx(1.0));

  // box [-1,1]^m via projection distance
  spec.set_distance = [](const Vector& k) {
    return (k - k.cwiseMax(-1.0).cwiseMin(1.0)).norm();
  };
  CHECK(control_distance(spec, far) == doctest::Approx(1.0));
}

TEST_CASE("unknown variants and bad arguments are rejected") {
  CHECK_THROWS_AS(parse_variant("cubic"), std::invalid_argument);
  CHECK_THROWS_AS(make_benchmark(BenchmarkVariant::Smooth, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_benchmark(BenchmarkVariant::Smooth, 3, 0.0), std::invalid_argument);
}
