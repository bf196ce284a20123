// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The two end-to-end training criteria share one run.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include "martnet/cli.hpp"
#include "martnet/oracle.hpp"
#include "martnet/report.hpp"
#include "martnet/verify.hpp"

using namespace martnet;
namespace fs = std::filesystem;

namespace {

constexpr Index kThreads = 2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> decile(const std::vector<TrainingRecord>& hist, double from,
                           double (*field)(const TrainingRecord&)) {
  const size_t n = hist.size();
  const size_t lo = static_cast<size_t>(from * double(n));
  const size_t hi = std::min(n, lo + std::max<size_t>(1, n / 10));
  std::vector<double> out;
  for (size_t i = lo; i < hi; ++i) out.push_back(field(hist[i]));
  return out;
}

ControlNet pinned_zero_control(const ProblemSpec& spec) {
  ControlNet c;
  c.body.w.push_back(Matrix::Zero(spec.m, spec.d + 1));
  c.body.b.push_back(Vector::Zero(spec.m));
  c.lo = Vector::Zero(spec.m);
  c.hi = Vector::Zero(spec.m);
  return c;
}

// ---- criterion implementations -------------------------------------------

Outcome noise_moments() {
  const MomentReport g = check_moments(NoiseLaw::gaussian(1), 1'000'000, 3.0, 5.0, RngStream(11));
  const NoiseLaw tp = NoiseLaw::three_point(1, std::sqrt(3.0));
  const MomentReport t = check_moments(tp, 1'000'000, tp.kurtosis(), 5.0, RngStream(12));
  Outcome o;
  o.pass = g.pass && t.pass;
  o.detail = "gaussian{" + g.detail + "} three-point{" + t.detail + "}";
  return o;
}

Outcome residual_identity() {
  const double gap = residual_identity_gap(1000, RngStream(13));
  Outcome o;
  o.pass = gap <= 1e-12;
  std::ostringstream os;
  os << "max |martingale - rdo| = " << gap << " over 1000 shared-draw configurations";
  o.detail = os.str();
  return o;
}

Outcome rdo_bias() {
  const Index d = 2;
  ProblemSpec spec;
  spec.d = spec.q = spec.m = d;
  spec.T = 100.0;
  spec.iso_diffusion = std::sqrt(2.0);
  spec.drift = [d](double, const Vector&, const Vector&) { return Vector::Zero(d); };
  spec.cost = [](double, const Vector&, const Vector&) { return 0.0; };
  spec.terminal = [](const Vector&) { return 0.0; };

  Vector x = Vector::Zero(d);
  x[0] = 1.0;
  RdoConfig cfg;
  cfg.h = 0.2;
  cfg.law = NoiseLaw::gaussian(d);
  const Vector kappa = Vector::Zero(d);

  const ScalarField quad = [](double, const Vector& y) { return y.squaredNorm(); };
  const ScalarField quartic = [](double, const Vector& y) {
    const double n2 = y.squaredNorm();
    return n2 * n2;
  };
  const double d0_quad = 2.0 * double(d);
  const double d0_quartic = (4.0 * double(d) + 8.0) * x.squaredNorm();

  const BiasEstimate qb =
      rdo_bias_probe(quad, d0_quad, spec, kappa, cfg, 0.0, x, 1'000'000, RngStream(14));
  const BiasRatio ratio =
      rdo_bias_ratio(quartic, d0_quartic, spec, kappa, cfg, 0.0, x, 1'000'000, RngStream(15));

  Outcome o;
  const bool quad_ok = std::abs(qb.bias) <= 3.0 * qb.se;
  const bool ratio_ok = ratio.ratio >= 1.6 && ratio.ratio <= 2.4;
  o.pass = quad_ok && ratio_ok;
  std::ostringstream os;
  os << "quadratic bias " << qb.bias << " (se " << qb.se << "), quartic bias(h)/bias(h/2) = "
     << ratio.ratio;
  o.detail = os.str();
  return o;
}

Outcome gradient_oracle() {
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 3, 1.0);
  TrainConfig tc;
  tc.adversarial_width = 6;
  tc.seed = 321;
  TrainState state = init_train_state(spec, tc);

  Objective obj;
  obj.spec = &spec;
  obj.rdo.h = spec.T / 8.0;
  obj.rdo.law = NoiseLaw::gaussian(spec.q);

  const EvalGrid grid = build_eval_grid(spec.d, 4);
  const PathPool pool = generate_paths(spec, state.control, grid, 8, 16, RngStream(322));
  Minibatch batch;
  for (Index k = 0; k < 16; ++k) {
    batch.items.emplace_back(k % 4 == 0 ? 7 : k % 8, k % 16);  // include horizon steps
  }
  const double lambda = 5.0;
  const RngStream draws(323);
  const LossGrads ev = loss_gradients(obj, pool, batch, state.value, state.control,
                                      state.adversarial, lambda, draws);
  auto loss = [&]() {
    return full_loss(obj, pool, batch, state.value, state.control, state.adversarial, lambda,
                     draws)
        .total;
  };
  const double wv =
      grad_check(param_blocks(state.value.body), grad_blocks(ev.value), loss, 50, RngStream(324));
  const double wc = grad_check(param_blocks(state.control.body), grad_blocks(ev.control), loss,
                               50, RngStream(325));
  const double wa = grad_check(param_blocks(state.adversarial), grad_blocks(ev.adversarial), loss,
                               50, RngStream(326));
  Outcome o;
  o.pass = wv < 1e-4 && wc < 1e-4 && wa < 1e-4;
  std::ostringstream os;
  os << "worst relative error: value " << wv << ", control " << wc << ", adversarial " << wa;
  o.detail = os.str();
  return o;
}

Outcome euler_audit() {
  const double T = 1.0;
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 3, T, 0.0);
  const ControlNet control = pinned_zero_control(spec);
  const EvalGrid grid = build_eval_grid(3, 6);
  const Index M = 10000;
  const PathPool pool = generate_paths(spec, control, grid, 25, M, RngStream(41));
  const double replay = euler_replay_error(spec, control, pool);

  bool var_ok = true;
  std::ostringstream os;
  os << "replay " << replay << ", var/2T:";
  const Matrix delta = pool.states.back() - pool.states.front();
  for (Index i = 0; i < 3; ++i) {
    const double mean = delta.row(i).mean();
    const double var = (delta.row(i).array() - mean).square().sum() / double(M - 1);
    const double se = 2.0 * T * std::sqrt(2.0 / double(M - 1));
    var_ok = var_ok && std::abs(var - 2.0 * T) < 5.0 * se;
    os << " " << var / (2.0 * T);
  }
  Outcome o;
  o.pass = replay <= 1e-12 && var_ok;
  o.detail = os.str();
  return o;
}

Outcome oracle_consistency() {
  // horizon limit: exact equality with the terminal
  RngStream rng(51);
  bool exact = true;
  OracleConfig small;
  small.mc_samples = 100;
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::Smooth, 5, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Vector x = sample_gaussian(rng, 5);
    const RefValue rv = reference_value(BenchmarkVariant::Smooth, 5, 1.0, 1.0, x, small);
    exact = exact && (rv.value == spec.terminal(x));
  }

  OracleConfig mc;
  mc.mc_samples = 1'000'000;
  mc.seed = 52;
  mc.threads = kThreads;
  OracleConfig quad;
  quad.mode = OracleConfig::Mode::Quadrature1d;
  Vector x0(1);
  x0[0] = 0.0;
  const RefValue a = reference_value(BenchmarkVariant::Smooth, 1, 1.0, 0.0, x0, mc);
  const RefValue b = reference_value(BenchmarkVariant::Smooth, 1, 1.0, 0.0, x0, quad);
  // three significant digits: half a unit in the third digit of the target
  const double tol = 0.5 * std::pow(10.0, std::floor(std::log10(std::abs(b.value))) - 2.0);
  Outcome o;
  o.pass = exact && std::abs(a.value - b.value) <= tol;
  std::ostringstream os;
  os << "horizon limit exact: " << (exact ? "yes" : "no") << "; mc " << a.value << " vs quadrature "
     << b.value << " (tol " << tol << ")";
  o.detail = os.str();
  return o;
}

Outcome heat_sanity_run() {
  const ProblemSpec spec = make_benchmark(BenchmarkVariant::HeatSanity, 2, 1.0);
  TrainConfig tc;
  tc.epochs = 300;
  tc.seed = 7;
  tc.record_timing = false;

  const EvalGrid grid = build_eval_grid(spec.d, tc.points_per_segment);
  OracleConfig oc;
  oc.mc_samples = 1'000'000;
  oc.seed = 71;
  oc.threads = kThreads;
  const auto refs = reference_grid(BenchmarkVariant::HeatSanity, 2, 1.0, 0.0, grid.points, oc);
  OracleAttachment att;
  for (const auto& rv : refs) {
    att.reference.push_back(rv.value);
    att.denom += std::abs(rv.value);
  }

  const TrainState state = train(spec, tc, &att);
  const double initial_g = state.history.front().mart_loss;
  const double final_g = state.history.back().mart_loss;
  const double rel = state.history.back().rel_error;

  Outcome o;
  o.pass = rel < 0.05 && final_g < initial_g / 10.0;
  std::ostringstream os;
  os << "rel_error " << rel << " (< 0.05), |G| " << initial_g << " -> " << final_g;
  o.detail = os.str();
  return o;
}

struct BenchmarkRun {
  ProblemSpec spec;
  std::optional<TrainState> state;
  double rel_error = 1.0;
};
BenchmarkRun g_benchmark;

Outcome benchmark_run() {
  g_benchmark.spec = make_benchmark(BenchmarkVariant::Smooth, 10, 1.0);
  TrainConfig tc;  // desk profile: N=50, M=1024, I=500, batches 128/256
  tc.seed = 1;
  tc.record_timing = false;

  const EvalGrid grid = build_eval_grid(10, tc.points_per_segment);
  OracleConfig oc;
  oc.mc_samples = 1'000'000;
  oc.seed = 81;
  oc.threads = kThreads;
  const auto refs = reference_grid(BenchmarkVariant::Smooth, 10, 1.0, 0.0, grid.points, oc);
  OracleAttachment att;
  for (const auto& rv : refs) {
    att.reference.push_back(rv.value);
    att.denom += std::abs(rv.value);
  }

  g_benchmark.state = train(g_benchmark.spec, tc, &att);
  const auto& hist = g_benchmark.state->history;
  g_benchmark.rel_error = hist.back().rel_error;

  const auto mart = [](const TrainingRecord& r) { return r.mart_loss; };
  const auto meanv = [](const TrainingRecord& r) { return r.mean_value; };
  const double mart_first = median_of(decile(hist, 0.0, mart));
  const double mart_last = median_of(decile(hist, 0.9, mart));
  const double mv_mid = median_of(decile(hist, 0.5, meanv));
  const double mv_last = median_of(decile(hist, 0.9, meanv));
  const double mv_tol = std::max(0.02 * std::abs(mv_mid), 1e-3);

  Outcome o;
  const bool rel_ok = g_benchmark.rel_error <= 0.10;
  const bool mart_ok = mart_last < mart_first;
  const bool mv_ok = mv_last <= mv_mid + mv_tol;
  o.pass = rel_ok && mart_ok && mv_ok;
  std::ostringstream os;
  os << "rel_error " << g_benchmark.rel_error << " (<= 0.10), mart-loss median " << mart_first
     << " -> " << mart_last << ", mean-of-value median " << mv_mid << " -> " << mv_last;
  o.detail = os.str();
  return o;
}

Outcome control_improvement() {
  Outcome o;
  if (!g_benchmark.state) {
    o.detail = "benchmark training unavailable";
    return o;
  }
  const ProblemSpec& spec = g_benchmark.spec;
  const Vector x0 = Vector::Zero(spec.d);
  const Index rollouts = 20000, steps = 50;
  const RefValue j_trained =
      socp_cost(spec, g_benchmark.state->control, x0, rollouts, steps, RngStream(91), kThreads);
  const RefValue j_zero =
      socp_cost(spec, pinned_zero_control(spec), x0, rollouts, steps, RngStream(92), kThreads);
  OracleConfig oc;
  oc.mc_samples = 1'000'000;
  oc.seed = 93;
  oc.threads = kThreads;
  const RefValue v_ref = reference_value(BenchmarkVariant::Smooth, spec.d, spec.T, 0.0, x0, oc);

  const double se_pair = std::sqrt(j_trained.se * j_trained.se + j_zero.se * j_zero.se);
  const double se_ref = std::sqrt(j_trained.se * j_trained.se + v_ref.se * v_ref.se);
  const bool improves = j_trained.value <= j_zero.value - se_pair;
  const bool verifies = j_trained.value >= v_ref.value - 3.0 * se_ref;
  o.pass = improves && verifies;
  std::ostringstream os;
  os << "J(trained) " << j_trained.value << " (se " << j_trained.se << "), J(0) " << j_zero.value
     << " (se " << j_zero.se << "), v_ref " << v_ref.value;
  o.detail = os.str();
  return o;
}

Outcome determinism() {
  Outcome o;
  const char* cli = std::getenv("MARTNET_CLI");
  if (!cli) {
    o.detail = "MARTNET_CLI not set";
    return o;
  }
  const fs::path base = fs::temp_directory_path() / "martnet_acceptance_det";
  fs::remove_all(base);
  fs::create_directories(base);
  const auto run = [&](const std::string& out) {
    std::ostringstream cmd;
    cmd << cli << " train --set problem.variant=heat-sanity --set problem.d=2"
        << " --set paths.N=10 --set paths.M=16 --set paths.points_per_segment=3"
        << " --set objective.adversarial_width=6 --set trainer.I=5"
        << " --set trainer.batch_schedule=1.0:8 --set oracle.mc_samples=20000"
        << " --set output.timing=false --set seed=2024 --threads 1 --out " << out << " > "
        << out << ".log 2>&1";
    const int status = std::system(cmd.str().c_str());
    return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  const std::string out_a = (base / "a").string(), out_b = (base / "b").string();
  if (!run(out_a) || !run(out_b)) {
    o.detail = "training subprocess failed";
    return o;
  }
  const auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(out_a + "/history.csv");
  const std::string b = slurp(out_b + "/history.csv");
  o.pass = !a.empty() && a == b;
  o.detail = o.pass ? "history.csv byte-identical across equal-seed runs"
                    : "histories differ or are empty";
  fs::remove_all(base);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "noise-law moments", noise_moments},
      {2, "rdo/martingale identity", residual_identity},
      {3, "first-order rdo bias", rdo_bias},
      {4, "gradient oracle", gradient_oracle},
      {5, "euler audit", euler_audit},
      {6, "oracle self-consistency", oracle_consistency},
      {7, "heat-sanity end-to-end", heat_sanity_run},
      {8, "benchmark end-to-end (d=10)", benchmark_run},
      {9, "control improvement", control_improvement},
      {10, "determinism", determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto started = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << " (" << c.name
              << "): " << out.detail << " [" << secs << " s]" << std::endl;
    if (!out.pass) ++failures;
  }
  if (failures > 0) std::cout << failures << " criterion(s) failed" << std::endl;
  return failures == 0 ? 0 : 1;
}
