#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "martnet/oracle.hpp"

using namespace martnet;

namespace {

ControlNet pinned_zero(const ProblemSpec& spec) {
  ControlNet c;
  c.body.w.push_back(Matrix::Zero(spec.m, spec.d + 1));
  c.body.b.push_back(Vector::Zero(spec.m));
  c.lo = Vector::Zero(spec.m);
  c.hi = Vector::Zero(spec.m);
  return c;
}

}  // namespace

TEST_CASE("gauss-hermite is exact on low moments") {
  const GaussHermite gh = GaussHermite::make(24);
  CHECK(gh.expectation([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(gh.expectation([](double z) { return z; }) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(gh.expectation([](double z) { return z * z; }) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gh.expectation([](double z) { return z * z * z * z; }) ==
        doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("reference value is exact at the horizon") {
  OracleConfig cfg;
  cfg.mc_samples = 100;
  RngStream rng(1);
  for (const auto variant :
       {BenchmarkVariant::Smooth, BenchmarkVariant::Oscillatory, BenchmarkVariant::HeatSanity}) {
    const ProblemSpec spec = make_benchmark(variant, 4, 1.0);
    const Vector x = sample_gaussian(rng, 4);
    const RefValue rv = reference_value(variant, 4, 1.0, 1.0, x, cfg);
    CHECK(rv.value == spec.terminal(x));  // degenerate expectation, bitwise
    CHECK(rv.se == 0.0);
  }
  const RefValue origin =
      reference_value(BenchmarkVariant::Smooth, 3, 1.0, 1.0, Vector::Zero(3), cfg);
  CHECK(origin.value == doctest::Approx(1.0 + std::log(0.5)).epsilon(1e-15));
}

TEST_CASE("monte-carlo matches 1-D quadrature for the smooth variant") {
  OracleConfig mc;
  mc.mc_samples = 200000;
  mc.seed = 11;
  OracleConfig quad;
  quad.mode = OracleConfig::Mode::Quadrature1d;
  Vector x(1);
  x[0] = 0.0;
  const RefValue a = reference_value(BenchmarkVariant::Smooth, 1, 1.0, 0.0, x, mc);
  const RefValue b = reference_value(BenchmarkVariant::Smooth, 1, 1.0, 0.0, x, quad);
  CHECK(std::abs(a.value - b.value) < 3.0 * a.se);
  CHECK(a.se < 0.01);
}

TEST_CASE("heat-sanity oracle is the plain terminal expectation") {
  OracleConfig mc;
  mc.mc_samples = 200000;
  mc.seed = 12;
  OracleConfig quad;
  quad.mode = OracleConfig::Mode::Quadrature1d;
  Vector x(1);
  x[0] = 0.5;
  const RefValue a = reference_value(BenchmarkVariant::HeatSanity, 1, 1.0, 0.25, x, mc);
  const RefValue b = reference_value(BenchmarkVariant::HeatSanity, 1, 1.0, 0.25, x, quad);
  CHECK(std::abs(a.value - b.value) < 3.0 * a.se);

  // the log-transformed value differs (Jensen): heat reference must not use it
  const RefValue c = reference_value(BenchmarkVariant::Smooth, 1, 1.0, 0.25, x, quad);
  CHECK(std::abs(b.value - c.value) > 0.01);
}

TEST_CASE("oscillatory MC agrees with the coordinate-factorized quadrature") {
  // exp(-g(y)) factorizes over coordinates along the diagonal, turning the
  // d-dimensional expectation into a power of a 1-D integral.
  const Index d = 3;
  const double T = 1.0, t = 0.0, s = 0.4;
  const GaussHermite gh = GaussHermite::make(128);
  const double delta = 3.14159265358979323846 / 10.0;
  const auto f = [&](double y) {
    return std::sin(y - 0.5 * 3.14159265358979323846) + std::sin(1.0 / (delta + y * y));
  };
  const double scale = std::sqrt(2.0 * (T - t));
  const double one_dim = gh.expectation(
      [&](double z) { return std::exp(-f(s + scale * z) / double(d)); });
  const double quad_value = 1.0 - double(d) * std::log(one_dim);

  OracleConfig mc;
  mc.mc_samples = 400000;
  mc.seed = 13;
  const RefValue est =
      reference_value(BenchmarkVariant::Oscillatory, d, T, t, Vector::Constant(d, s), mc);
  CHECK(std::abs(est.value - quad_value) < 3.0 * est.se + 1e-3);
}

TEST_CASE("oscillatory diagonal restriction is nearly d-independent") {
  OracleConfig mc;
  mc.mc_samples = 100000;
  mc.seed = 14;
  const double s = 0.5;
  const RefValue low =
      reference_value(BenchmarkVariant::Oscillatory, 128, 1.0, 0.0, Vector::Constant(128, s), mc);
  mc.seed = 15;
  const RefValue high =
      reference_value(BenchmarkVariant::Oscillatory, 512, 1.0, 0.0, Vector::Constant(512, s), mc);
  CHECK(std::abs(low.value - high.value) < 3.0 * (low.se + high.se) + 0.02);
}

TEST_CASE("log-sum-exp evaluation stays finite far from the origin") {
  OracleConfig mc;
  mc.mc_samples = 20000;
  mc.seed = 16;
  Vector x = Vector::Zero(1000);
  x[0] = 10.0;
  const RefValue rv = reference_value(BenchmarkVariant::Smooth, 1000, 1.0, 0.0, x, mc);
  CHECK(std::isfinite(rv.value));
  CHECK(std::isfinite(rv.se));
}

TEST_CASE("relative error algebra") {
  CHECK(relative_error({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  // uniform offset: eps * n / sum|v|
  CHECK(relative_error({1.1, 2.1, 3.1}, {1.0, 2.0, 3.0}) ==
        doctest::Approx(0.3 / 6.0).epsilon(1e-12));
  // sign flip on a 3-point grid
  CHECK(relative_error({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0}) == doctest::Approx(4.0 / 6.0));
  CHECK_THROWS_AS(relative_error({1.0}, {0.0}), std::domain_error);
  CHECK_THROWS_AS(relative_error({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("deterministic rollout cost with diffusion off") {
  ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 3, 1.0, 0.0);
  spec.iso_diffusion = 0.0;
  const ControlNet zero = pinned_zero(spec);
  const RefValue j = socp_cost(spec, zero, Vector::Zero(3), 16, 10, RngStream(17));
  CHECK(j.value == doctest::Approx(1.0 + std::log(0.5)).epsilon(1e-15));
  CHECK(j.se == 0.0);
}

TEST_CASE("zero-control cost dominates the optimal value") {
  const Index d = 5;
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, d, 1.0);
  const ControlNet zero = pinned_zero(spec);
  const RefValue j0 = socp_cost(spec, zero, Vector::Zero(d), 4000, 25, RngStream(18));
  OracleConfig mc;
  mc.mc_samples = 100000;
  mc.seed = 19;
  const RefValue ref = reference_value(BenchmarkVariant::Smooth, d, 1.0, 0.0, Vector::Zero(d), mc);
  CHECK(j0.value >= ref.value - 3.0 * std::sqrt(j0.se * j0.se + ref.se * ref.se));
}

TEST_CASE("socp cost is thread-count invariant") {
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 3, 1.0);
  const ControlNet zero = pinned_zero(spec);
  const RefValue one = socp_cost(spec, zero, Vector::Zero(3), 500, 10, RngStream(20), 1);
  const RefValue two = socp_cost(spec, zero, Vector::Zero(3), 500, 10, RngStream(20), 2);
  CHECK(one.value == two.value);
  CHECK(one.se == two.se);
}

TEST_CASE("reference grid is thread-count invariant") {
  const EvalGrid grid = build_eval_grid(4, 5);
  OracleConfig one;
  one.mc_samples = 40000;
  one.seed = 21;
  one.threads = 1;
  OracleConfig two = one;
  two.threads = 2;
  const auto a = reference_grid(BenchmarkVariant::Smooth, 4, 1.0, 0.0, grid.points, one);
  const auto b = reference_grid(BenchmarkVariant::Smooth, 4, 1.0, 0.0, grid.points, two);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].se == b[i].se);
  }
}

TEST_CASE("oracle cache round-trips and rejects stale keys") {
  const std::string path = "oracle_cache_test.json";
  std::remove(path.c_str());
  const EvalGrid grid = build_eval_grid(2, 3);
  OracleConfig cfg;
  cfg.mc_samples = 5000;
  cfg.seed = 22;

  const auto first = cached_reference_grid(path, BenchmarkVariant::Smooth, 2, 1.0, 0.0, grid, cfg);
  const auto second = cached_reference_grid(path, BenchmarkVariant::Smooth, 2, 1.0, 0.0, grid, cfg);
  REQUIRE(first.size() == second.size());
  for (size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].value == second[i].value);  // loaded, not recomputed
    CHECK(first[i].se == second[i].se);
  }

  OracleCacheKey other{"smooth", 2, 1.0, 0.0, 9999, 22, 3};
  std::vector<RefValue> out;
  CHECK_FALSE(load_oracle_cache(path, other, out));
  std::remove(path.c_str());
}
