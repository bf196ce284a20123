#pragma once

#include <functional>
#include <limits>
#include <string>

#include "martnet/types.hpp"

namespace martnet {

// A controlled SDE / HJB instance:
//   dX = mu(t, X, u) dt + sigma(t, X, u) dB,   terminal value v(T, x) given,
//   running cost c(t, x, u), control constrained to a box or a general set.
//
// terminal() is the PDE terminal function itself (any "1 + g" style wrapping
// is already folded in here so value networks need no special casing).
// The *_ctrl_* hooks are vector-Jacobian products in the control argument;
// the training loss chains through them when a jump endpoint depends on the
// control network.
struct ProblemSpec {
  Index d = 0;  // state dimension
  Index q = 0;  // Brownian dimension
  Index m = 0;  // control dimension
  double T = 0.0;

  // sigma = iso_diffusion * I when finite (requires q == d); otherwise the
  // diffusion() matrix hook is used.
  double iso_diffusion = std::numeric_limits<double>::quiet_NaN();
  std::function<Matrix(double, const Vector&, const Vector&)> diffusion;  // d x q

  std::function<Vector(double, const Vector&, const Vector&)> drift;  // mu
  std::function<double(double, const Vector&, const Vector&)> cost;   // c
  std::function<double(const Vector&)> terminal;                      // v(T, .)
  std::function<Vector(const Vector&)> terminal_grad;

  // cot is a d-vector cotangent on the drift / on sigma*s; results are
  // m-vector cotangents on the control. diffusion_ctrl_vjp may be null when
  // sigma does not depend on the control.
  std::function<Vector(double, const Vector&, const Vector&, const Vector&)> drift_ctrl_vjp;
  std::function<Vector(double, const Vector&, const Vector&, const Vector&, const Vector&)>
      diffusion_ctrl_vjp;
  std::function<Vector(double, const Vector&, const Vector&)> cost_ctrl_grad;

  // Box constraint [lo, hi] componentwise, or a general set with a distance
  // function (penalty route).
  Vector control_lo, control_hi;
  bool general_set = false;
  std::function<double(const Vector&)> set_distance;
  std::function<Vector(const Vector&)> set_distance_grad;

  bool isotropic() const { return std::isfinite(iso_diffusion); }
};

Vector eval_drift(const ProblemSpec& spec, double t, const Vector& x, const Vector& kappa);

// sigma(t, x, kappa) * w. The matrix path accumulates columns in index order
// and, with skip_zeros, drops exact-zero components of w; both orders produce
// bitwise-identical sums because skipped terms are exact zero vectors.
Vector eval_diffusion_apply(const ProblemSpec& spec, double t, const Vector& x,
                            const Vector& kappa, const Vector& w, bool skip_zeros = true);

// dist(kappa, U) for general-set problems; calling it on a box-constrained
// instance is a usage error.
double control_distance(const ProblemSpec& spec, const Vector& kappa);

enum class BenchmarkVariant { Smooth, Oscillatory, HeatSanity };

BenchmarkVariant parse_variant(const std::string& name);
std::string variant_name(BenchmarkVariant v);

// The test equation: mu = 2*kappa, sigma = sqrt(2)*I, c = |kappa|^2,
// terminal v(T, x) = 1 + g(x) with g per variant. HeatSanity freezes the
// control at zero (degenerate box) and drops the running cost, leaving the
// plain heat equation dt v + Lap v = 0 as a linear correctness anchor.
ProblemSpec make_benchmark(BenchmarkVariant variant, Index d, double T,
                           double control_halfwidth = 4.0);

// Terminal shapes exposed for oracles and tests.
double smooth_terminal_g(const Vector& x);       // ln(0.5 (1 + |x|^2))
double oscillatory_terminal_g(const Vector& x);  // coordinate mean of a sine pair, delta = pi/10

}  // namespace martnet
