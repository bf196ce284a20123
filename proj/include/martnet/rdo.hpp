#pragma once

#include <functional>

#include "martnet/nets.hpp"
#include "martnet/problem.hpp"
#include "martnet/rng.hpp"

namespace martnet {

// Law of the noise vector W driving the random jumps. Both laws satisfy
// E W = E W^3 = 0, E W^2 = 1, E W^4 < inf componentwise; the sparse
// three-point law P(W = +-r) = 1/(2 r^2), P(W = 0) = 1 - 1/r^2 trades
// kurtosis r^2 for a (1 - 1/r^2) fraction of exact zeros.
struct NoiseLaw {
  enum class Kind { Gaussian, ThreePoint };
  Kind kind = Kind::Gaussian;
  double r = 1.7320508075688772;  // sqrt(3): matches the Gaussian fourth moment
  Index q = 0;

  static NoiseLaw gaussian(Index q) { return {Kind::Gaussian, 0.0, q}; }
  static NoiseLaw three_point(Index q, double r);

  double kurtosis() const { return kind == Kind::Gaussian ? 3.0 : r * r; }
};

Vector sample_noise(const NoiseLaw& law, RngStream& rng);

// Step size h of the random finite difference; h must equal the trainer's
// grid step T/N (one step size everywhere).
struct RdoConfig {
  double h = 0.0;
  NoiseLaw law;
};

struct JumpSample {
  Vector xi;  // mu(t,x,u) h + sigma(t,x,u) sqrt(h) W
  Vector w;   // the draw that produced it
};

JumpSample make_jump(const ProblemSpec& spec, const ControlNet& control, const RdoConfig& cfg,
                     double t, const Vector& x, RngStream& rng);

// Pointwise residual R = [v(t+h, x+xi) - v(t, x)] / h + c(t, x, u(t, x)).
// The _w overload takes the noise draw explicitly (shared-draw tests).
double rdo_residual(const ProblemSpec& spec, const ValueNet& value, const ControlNet& control,
                    const RdoConfig& cfg, double t, const Vector& x, RngStream& rng);
double rdo_residual_w(const ProblemSpec& spec, const ValueNet& value, const ControlNet& control,
                      const RdoConfig& cfg, double t, const Vector& x, const Vector& w);

// Residual with an injected analytic value field and frozen control, for
// probes whose exact expectation is known in closed form.
double rdo_residual_fn(const ProblemSpec& spec, const std::function<double(double, const Vector&)>& value_fn,
                       const Vector& kappa, const RdoConfig& cfg, double t, const Vector& x,
                       RngStream& rng);

// The same residual through the discrete martingale route: one-step Euler
// state X' = x + mu h + sigma dB, increment v(t+h, X') - v(t, x) + h c,
// scaled by 1/h. With dB = sqrt(h) w and Gaussian w the two routes are
// algebraically identical; the arithmetic is kept independent so tests can
// confirm the identity rather than sharing it.
double martingale_residual(const ProblemSpec& spec, const ValueNet& value,
                           const ControlNet& control, const RdoConfig& cfg, double t,
                           const Vector& x, const Vector& brownian_increment);

// Grid-aligned successor time: snaps t + h onto the horizon when the step
// lands there up to rounding, so the terminal hard switch fires exactly.
double step_time(double t, double h, double horizon);

// Diagnostics: estimate E[D_h f] - D0 at (t, x) for a test function with a
// known generator value, under frozen control kappa.
struct BiasEstimate {
  double mean_dh = 0.0;
  double se = 0.0;
  double bias = 0.0;  // mean_dh - d0
};

using ScalarField = std::function<double(double, const Vector&)>;

BiasEstimate rdo_bias_probe(const ScalarField& fn, double d0_value, const ProblemSpec& spec,
                            const Vector& kappa, const RdoConfig& cfg, double t, const Vector& x,
                            Index samples, RngStream rng);

// Paired-sample ratio bias(h) / bias(h/2); first-order consistency makes it
// approach 2 as the estimate converges.
struct BiasRatio {
  BiasEstimate coarse;  // step h
  BiasEstimate fine;    // step h/2
  double ratio = 0.0;
};

BiasRatio rdo_bias_ratio(const ScalarField& fn, double d0_value, const ProblemSpec& spec,
                         const Vector& kappa, const RdoConfig& cfg, double t, const Vector& x,
                         Index samples, RngStream rng);

}  // namespace martnet
