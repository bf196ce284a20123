#include "martnet/problem.hpp"

#include <cmath>

namespace martnet {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kOscDelta = kPi / 10.0;
}  // namespace

Vector eval_drift(const ProblemSpec& spec, double t, const Vector& x, const Vector& kappa) {
  MARTNET_REQUIRE(x.size() == spec.d, "eval_drift: state dimension mismatch");
  MARTNET_REQUIRE(kappa.size() == spec.m, "eval_drift: control dimension mismatch");
  Vector mu = spec.drift(t, x, kappa);
  MARTNET_REQUIRE(mu.size() == spec.d, "eval_drift: drift returned wrong dimension");
  return mu;
}

Vector eval_diffusion_apply(const ProblemSpec& spec, double t, const Vector& x,
                            const Vector& kappa, const Vector& w, bool skip_zeros) {
  MARTNET_REQUIRE(w.size() == spec.q, "eval_diffusion_apply: noise dimension mismatch");
  if (spec.isotropic()) {
    return spec.iso_diffusion * w;
  }
  const Matrix sigma = spec.diffusion(t, x, kappa);
  MARTNET_REQUIRE(sigma.rows() == spec.d && sigma.cols() == spec.q,
                  "eval_diffusion_apply: sigma has wrong shape");
  Vector out = Vector::Zero(spec.d);
  for (Index j = 0; j < spec.q; ++j) {
    if (skip_zeros && w[j] == 0.0) continue;
    out += w[j] * sigma.col(j);
  }
  return out;
}

double control_distance(const ProblemSpec& spec, const Vector& kappa) {
  if (!spec.general_set) {
    throw std::logic_error("control_distance: problem uses a box control set");
  }
  const double dist = spec.set_distance(kappa);
  MARTNET_REQUIRE(dist >= 0.0, "control_distance: negative distance");
  return dist;
}

BenchmarkVariant parse_variant(const std::string& name) {
  if (name == "smooth") return BenchmarkVariant::Smooth;
  if (name == "oscillatory") return BenchmarkVariant::Oscillatory;
  if (name == "heat-sanity" || name == "heat_sanity") return BenchmarkVariant::HeatSanity;
  fail("unknown problem variant: " + name);
}

std::string variant_name(BenchmarkVariant v) {
  switch (v) {
    case BenchmarkVariant::Smooth: return "smooth";
    case BenchmarkVariant::Oscillatory: return "oscillatory";
    case BenchmarkVariant::HeatSanity: return "heat-sanity";
  }
  return "?";
}

double smooth_terminal_g(const Vector& x) { return std::log(0.5 * (1.0 + x.squaredNorm())); }

double oscillatory_terminal_g(const Vector& x) {
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    acc += std::sin(xi - 0.5 * kPi) + std::sin(1.0 / (kOscDelta + xi * xi));
  }
  return acc / static_cast<double>(x.size());
}

namespace {

Vector smooth_terminal_grad(const Vector& x) { return 2.0 / (1.0 + x.squaredNorm()) * x; }

Vector oscillatory_terminal_grad(const Vector& x) {
  Vector g(x.size());
  const double inv_d = 1.0 / static_cast<double>(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double denom = kOscDelta + xi * xi;
    g[i] = inv_d * (std::cos(xi - 0.5 * kPi) -
                    std::cos(1.0 / denom) * 2.0 * xi / (denom * denom));
  }
  return g;
}

}  // namespace

ProblemSpec make_benchmark(BenchmarkVariant variant, Index d, double T,
                           double control_halfwidth) {
  MARTNET_REQUIRE(d >= 1, "make_benchmark: d must be >= 1");
  MARTNET_REQUIRE(T > 0.0, "make_benchmark: T must be positive");
  MARTNET_REQUIRE(control_halfwidth >= 0.0, "make_benchmark: negative control box");

  ProblemSpec spec;
  spec.d = spec.q = spec.m = d;
  spec.T = T;
  spec.iso_diffusion = std::sqrt(2.0);
  spec.drift = [](double, const Vector&, const Vector& kappa) -> Vector { return 2.0 * kappa; };
  spec.drift_ctrl_vjp = [](double, const Vector&, const Vector&, const Vector& cot) -> Vector {
    return 2.0 * cot;
  };

  if (variant == BenchmarkVariant::HeatSanity) {
    // Frozen zero control: the degenerate box pins u = 0, and c = 0.
    control_halfwidth = 0.0;
    spec.cost = [](double, const Vector&, const Vector&) { return 0.0; };
    spec.cost_ctrl_grad = [d](double, const Vector&, const Vector&) -> Vector {
      return Vector::Zero(d);
    };
  } else {
    spec.cost = [](double, const Vector&, const Vector& kappa) { return kappa.squaredNorm(); };
    spec.cost_ctrl_grad = [](double, const Vector&, const Vector& kappa) -> Vector {
      return 2.0 * kappa;
    };
  }

  if (variant == BenchmarkVariant::Oscillatory) {
    spec.terminal = [](const Vector& x) { return 1.0 + oscillatory_terminal_g(x); };
    spec.terminal_grad = oscillatory_terminal_grad;
  } else {
    spec.terminal = [](const Vector& x) { return 1.0 + smooth_terminal_g(x); };
    spec.terminal_grad = smooth_terminal_grad;
  }

  spec.control_lo = Vector::Constant(d, -control_halfwidth);
  spec.control_hi = Vector::Constant(d, control_halfwidth);
  return spec;
}

}  // namespace martnet
