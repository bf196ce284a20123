#include "martnet/verify.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "martnet/trainer.hpp"

namespace martnet {

MomentReport check_moments(const NoiseLaw& law, Index draws, double expected_kurtosis,
                           double tol_se, RngStream rng) {
  NoiseLaw one = law;
  one.q = 1;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0, s6 = 0, s8 = 0;
  for (Index i = 0; i < draws; ++i) {
    const double w = sample_noise(one, rng)[0];
    const double w2 = w * w;
    s1 += w;
    s2 += w2;
    s3 += w2 * w;
    s4 += w2 * w2;
    s6 += w2 * w2 * w2;
    s8 += w2 * w2 * w2 * w2;
  }
  const double n = static_cast<double>(draws);
  MomentReport rep;
  rep.m1 = s1 / n;
  rep.m2 = s2 / n;
  rep.m3 = s3 / n;
  rep.m4 = s4 / n;
  // SE of the k-th moment estimate is sd(W^k)/sqrt(n), taken from sample
  // moments up to order 8.
  const double se1 = std::sqrt(rep.m2 / n);
  const double se2 = std::sqrt(std::max(0.0, rep.m4 - rep.m2 * rep.m2) / n);
  const double se3 = std::sqrt(std::max(0.0, s6 / n - rep.m3 * rep.m3) / n);
  const double se4 = std::sqrt(std::max(0.0, s8 / n - rep.m4 * rep.m4) / n);
  const bool ok1 = std::abs(rep.m1) <= tol_se * se1;
  const bool ok2 = std::abs(rep.m2 - 1.0) <= tol_se * se2;
  const bool ok3 = std::abs(rep.m3) <= tol_se * se3;
  const bool ok4 = std::abs(rep.m4 - expected_kurtosis) <= tol_se * se4;
  rep.pass = ok1 && ok2 && ok3 && ok4;
  std::ostringstream os;
  os << "m1=" << rep.m1 << " m2=" << rep.m2 << " m3=" << rep.m3 << " m4=" << rep.m4
     << " (expect kurtosis " << expected_kurtosis << ")";
  rep.detail = os.str();
  return rep;
}

std::vector<BlockRef> param_blocks(MlpNet& net) {
  std::vector<BlockRef> blocks;
  for (auto& w : net.w) blocks.push_back({w.data(), w.size()});
  for (auto& b : net.b) blocks.push_back({b.data(), b.size()});
  return blocks;
}

std::vector<BlockRef> param_blocks(AdversarialNet& net) {
  return {{net.w_t.data(), net.w_t.size()},
          {net.w_x.data(), net.w_x.size()},
          {net.bias.data(), net.bias.size()}};
}

std::vector<BlockRef> grad_blocks(const MlpGrad& g) {
  std::vector<BlockRef> blocks;
  for (const auto& w : g.w) blocks.push_back({const_cast<double*>(w.data()), w.size()});
  for (const auto& b : g.b) blocks.push_back({const_cast<double*>(b.data()), b.size()});
  return blocks;
}

std::vector<BlockRef> grad_blocks(const AdvGrad& g) {
  return {{const_cast<double*>(g.w_t.data()), g.w_t.size()},
          {const_cast<double*>(g.w_x.data()), g.w_x.size()},
          {const_cast<double*>(g.bias.data()), g.bias.size()}};
}

double grad_check(const std::vector<BlockRef>& params, const std::vector<BlockRef>& grads,
                  const std::function<double()>& loss, Index probes, RngStream rng,
                  double fd_step) {
  MARTNET_REQUIRE(params.size() == grads.size(), "grad_check: block count mismatch");
  Index total = 0;
  for (const auto& b : params) total += b.size;
  MARTNET_REQUIRE(total > 0, "grad_check: no parameters");
  double worst = 0.0;
  for (Index p = 0; p < probes; ++p) {
    Index flat = static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(total)));
    size_t blk = 0;
    while (flat >= params[blk].size) {
      flat -= params[blk].size;
      ++blk;
    }
    double* entry = params[blk].data + flat;
    const double saved = *entry;
    *entry = saved + fd_step;
    const double up = loss();
    *entry = saved - fd_step;
    const double down = loss();
    *entry = saved;
    const double fd = (up - down) / (2.0 * fd_step);
    const double bp = grads[blk].data[flat];
    const double rel = std::abs(fd - bp) / std::max(std::abs(fd) + std::abs(bp), 1e-3);
    worst = std::max(worst, rel);
  }
  return worst;
}

namespace {

bool report(std::ostream& out, const std::string& name, bool pass, const std::string& detail) {
  out << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
  return pass;
}

}  // namespace

double residual_identity_gap(Index trials, RngStream rng) {
  double worst = 0.0;
  for (Index trial = 0; trial < trials; ++trial) {
    RngStream st = rng.split(static_cast<std::uint64_t>(trial));
    const Index d = 1 + static_cast<Index>(st.uniform_below(4));
    const Index n_steps = 10 + static_cast<Index>(st.uniform_below(40));
    const double T = 0.25 + st.uniform_co();
    ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, d, T);
    ValueNet value = make_value_net(spec, st.split(1));
    ControlNet control = make_control_net(spec, st.split(2));
    RdoConfig cfg;
    cfg.h = T / static_cast<double>(n_steps);
    cfg.law = NoiseLaw::gaussian(spec.q);
    const Index n = static_cast<Index>(st.uniform_below(static_cast<std::uint64_t>(n_steps)));
    const double t = cfg.h * static_cast<double>(n);
    Vector x(d);
    for (Index i = 0; i < d; ++i) x[i] = 2.0 * st.uniform_co() - 1.0;
    RngStream draw = st.split(3);
    const Vector w = sample_noise(cfg.law, draw);
    const double r1 = rdo_residual_w(spec, value, control, cfg, t, x, w);
    const double r2 =
        martingale_residual(spec, value, control, cfg, t, x, std::sqrt(cfg.h) * w);
    worst = std::max(worst, std::abs(r1 - r2));
  }
  return worst;
}

namespace {

double battery_grad_check(RngStream rng) {
  ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 3, 1.0);
  TrainConfig tc;
  tc.n_steps = 8;
  tc.n_paths = 16;
  tc.points_per_segment = 4;
  tc.adversarial_width = 6;
  tc.seed = 77;
  TrainState state = init_train_state(spec, tc);

  Objective obj;
  obj.spec = &spec;
  obj.rdo.h = spec.T / static_cast<double>(tc.n_steps);
  obj.rdo.law = NoiseLaw::gaussian(spec.q);

  const EvalGrid grid = build_eval_grid(spec.d, tc.points_per_segment);
  const PathPool pool =
      generate_paths(spec, state.control, grid, tc.n_steps, tc.n_paths, rng.split(1));
  RngStream batch_rng = rng.split(2);
  const Minibatch batch = draw_minibatch(pool, 12, batch_rng);
  const double lambda = 5.0;
  const RngStream noise = rng.split(3);

  const LossGrads ev = loss_gradients(obj, pool, batch, state.value, state.control,
                                      state.adversarial, lambda, noise);
  auto loss = [&]() {
    return full_loss(obj, pool, batch, state.value, state.control, state.adversarial, lambda,
                     noise)
        .total;
  };
  double worst = grad_check(param_blocks(state.value.body), grad_blocks(ev.value), loss, 10,
                            rng.split(4));
  worst = std::max(worst, grad_check(param_blocks(state.control.body), grad_blocks(ev.control),
                                     loss, 10, rng.split(5)));
  worst = std::max(worst, grad_check(param_blocks(state.adversarial),
                                     grad_blocks(ev.adversarial), loss, 10, rng.split(6)));
  return worst;
}

}  // namespace

int run_verify_battery(std::ostream& out, Index threads) {
  (void)threads;
  int failures = 0;
  RngStream root(20240917);

  {
    const MomentReport g =
        check_moments(NoiseLaw::gaussian(1), 1'000'000, 3.0, 5.0, root.split(1));
    if (!report(out, "noise moments (gaussian)", g.pass, g.detail)) ++failures;
    const NoiseLaw tp = NoiseLaw::three_point(1, std::sqrt(3.0));
    const MomentReport t =
        check_moments(tp, 1'000'000, tp.kurtosis(), 5.0, root.split(2));
    if (!report(out, "noise moments (three-point r=sqrt(3))", t.pass, t.detail)) ++failures;
  }
  {
    const double gap = residual_identity_gap(200, root.split(3));
    std::ostringstream os;
    os << "max |martingale - rdo| = " << gap;
    if (!report(out, "residual route identity", gap <= 1e-12, os.str())) ++failures;
  }
  {
    const double worst = battery_grad_check(root.split(4));
    std::ostringstream os;
    os << "worst relative error = " << worst;
    if (!report(out, "gradient oracle", worst < 1e-4, os.str())) ++failures;
  }
  {
    ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 3, 1.0);
    ControlNet control = make_control_net(spec, root.split(5));
    const EvalGrid grid = build_eval_grid(spec.d, 6);
    const PathPool pool = generate_paths(spec, control, grid, 20, 64, root.split(6));
    const double err = euler_replay_error(spec, control, pool);
    std::ostringstream os;
    os << "replay deviation = " << err;
    if (!report(out, "euler path audit", err <= 1e-12, os.str())) ++failures;
  }
  return failures;
}

}  // namespace martnet
