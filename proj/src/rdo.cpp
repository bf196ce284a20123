#include "martnet/rdo.hpp"

#include <cmath>

namespace martnet {

NoiseLaw NoiseLaw::three_point(Index q, double r) {
  MARTNET_REQUIRE(r > 1.0, "NoiseLaw: three-point law requires r > 1");
  NoiseLaw law;
  law.kind = Kind::ThreePoint;
  law.r = r;
  law.q = q;
  return law;
}

Vector sample_noise(const NoiseLaw& law, RngStream& rng) {
  MARTNET_REQUIRE(law.q >= 1, "sample_noise: law has no dimension set");
  if (law.kind == NoiseLaw::Kind::Gaussian) return sample_gaussian(rng, law.q);
  MARTNET_REQUIRE(law.r > 1.0, "sample_noise: three-point law requires r > 1");
  const double p_tail = 1.0 / (2.0 * law.r * law.r);
  Vector w(law.q);
  for (Index i = 0; i < law.q; ++i) {
    const double u = rng.uniform_co();
    w[i] = (u < p_tail) ? law.r : (u < 2.0 * p_tail) ? -law.r : 0.0;
  }
  return w;
}

double step_time(double t, double h, double horizon) {
  const double next = t + h;
  if (std::abs(next - horizon) <= 1e-12 * std::max(1.0, std::abs(horizon))) return horizon;
  return next;
}

namespace {

void check_step(const RdoConfig& cfg, double t, double horizon) {
  MARTNET_REQUIRE(cfg.h > 0.0, "rdo: step h must be positive");
  if (step_time(t, cfg.h, horizon) > horizon) {
    throw std::domain_error("rdo: t + h exceeds the horizon");
  }
}

}  // namespace

JumpSample make_jump(const ProblemSpec& spec, const ControlNet& control, const RdoConfig& cfg,
                     double t, const Vector& x, RngStream& rng) {
  check_step(cfg, t, spec.T);
  JumpSample jump;
  jump.w = sample_noise(cfg.law, rng);
  const Vector kappa = control.control(t, x);
  const Vector scaled = std::sqrt(cfg.h) * jump.w;
  jump.xi = eval_drift(spec, t, x, kappa) * cfg.h +
            eval_diffusion_apply(spec, t, x, kappa, scaled);
  return jump;
}

double rdo_residual_w(const ProblemSpec& spec, const ValueNet& value, const ControlNet& control,
                      const RdoConfig& cfg, double t, const Vector& x, const Vector& w) {
  check_step(cfg, t, spec.T);
  const double t_next = step_time(t, cfg.h, spec.T);
  const Vector kappa = control.control(t, x);
  const Vector scaled = std::sqrt(cfg.h) * w;
  const Vector xi = eval_drift(spec, t, x, kappa) * cfg.h +
                    eval_diffusion_apply(spec, t, x, kappa, scaled);
  const Vector y = x + xi;
  return (value.value(t_next, y) - value.value(t, x)) / cfg.h + spec.cost(t, x, kappa);
}

double rdo_residual(const ProblemSpec& spec, const ValueNet& value, const ControlNet& control,
                    const RdoConfig& cfg, double t, const Vector& x, RngStream& rng) {
  check_step(cfg, t, spec.T);
  const Vector w = sample_noise(cfg.law, rng);
  return rdo_residual_w(spec, value, control, cfg, t, x, w);
}

double rdo_residual_fn(const ProblemSpec& spec,
                       const std::function<double(double, const Vector&)>& value_fn,
                       const Vector& kappa, const RdoConfig& cfg, double t, const Vector& x,
                       RngStream& rng) {
  check_step(cfg, t, spec.T);
  const double t_next = step_time(t, cfg.h, spec.T);
  const Vector w = sample_noise(cfg.law, rng);
  const Vector scaled = std::sqrt(cfg.h) * w;
  const Vector xi = eval_drift(spec, t, x, kappa) * cfg.h +
                    eval_diffusion_apply(spec, t, x, kappa, scaled);
  const Vector y = x + xi;
  return (value_fn(t_next, y) - value_fn(t, x)) / cfg.h + spec.cost(t, x, kappa);
}

double martingale_residual(const ProblemSpec& spec, const ValueNet& value,
                           const ControlNet& control, const RdoConfig& cfg, double t,
                           const Vector& x, const Vector& brownian_increment) {
  check_step(cfg, t, spec.T);
  const double t_next = step_time(t, cfg.h, spec.T);
  const Vector kappa = control.control(t, x);
  const Vector euler_state = x + eval_drift(spec, t, x, kappa) * cfg.h +
                             eval_diffusion_apply(spec, t, x, kappa, brownian_increment);
  const double delta_m = value.value(t_next, euler_state) - value.value(t, x) +
                         cfg.h * spec.cost(t, x, kappa);
  return delta_m / cfg.h;
}

namespace {

// One D_h sample of fn under frozen control, with a supplied draw.
double dh_sample(const ScalarField& fn, const ProblemSpec& spec, const Vector& kappa, double h,
                 double t, const Vector& x, const Vector& w) {
  const Vector scaled = std::sqrt(h) * w;
  const Vector xi =
      eval_drift(spec, t, x, kappa) * h + eval_diffusion_apply(spec, t, x, kappa, scaled);
  return (fn(t + h, x + xi) - fn(t, x)) / h;
}

BiasEstimate summarize(double sum, double sum_sq, Index n, double d0) {
  BiasEstimate e;
  e.mean_dh = sum / static_cast<double>(n);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(n) - e.mean_dh * e.mean_dh);
  e.se = std::sqrt(var / static_cast<double>(n));
  e.bias = e.mean_dh - d0;
  return e;
}

}  // namespace

BiasEstimate rdo_bias_probe(const ScalarField& fn, double d0_value, const ProblemSpec& spec,
                            const Vector& kappa, const RdoConfig& cfg, double t, const Vector& x,
                            Index samples, RngStream rng) {
  MARTNET_REQUIRE(samples >= 2, "rdo_bias_probe: need at least two samples");
  double sum = 0.0, sum_sq = 0.0;
  for (Index i = 0; i < samples; ++i) {
    RngStream st = rng.split(static_cast<std::uint64_t>(i));
    const Vector w = sample_noise(cfg.law, st);
    const double v = dh_sample(fn, spec, kappa, cfg.h, t, x, w);
    sum += v;
    sum_sq += v * v;
  }
  return summarize(sum, sum_sq, samples, d0_value);
}

BiasRatio rdo_bias_ratio(const ScalarField& fn, double d0_value, const ProblemSpec& spec,
                         const Vector& kappa, const RdoConfig& cfg, double t, const Vector& x,
                         Index samples, RngStream rng) {
  MARTNET_REQUIRE(samples >= 2, "rdo_bias_ratio: need at least two samples");
  double sum_c = 0.0, sq_c = 0.0, sum_f = 0.0, sq_f = 0.0;
  for (Index i = 0; i < samples; ++i) {
    RngStream st = rng.split(static_cast<std::uint64_t>(i));
    const Vector w = sample_noise(cfg.law, st);  // paired draw across both steps
    const double vc = dh_sample(fn, spec, kappa, cfg.h, t, x, w);
    const double vf = dh_sample(fn, spec, kappa, 0.5 * cfg.h, t, x, w);
    sum_c += vc;
    sq_c += vc * vc;
    sum_f += vf;
    sq_f += vf * vf;
  }
  BiasRatio out;
  out.coarse = summarize(sum_c, sq_c, samples, d0_value);
  out.fine = summarize(sum_f, sq_f, samples, d0_value);
  out.ratio = out.coarse.bias / out.fine.bias;
  return out;
}

}  // namespace martnet
