#include "martnet/trainer.hpp"

#include <chrono>
#include <cmath>

namespace martnet {

namespace {

// Stream tags for the deterministic split tree.
enum : std::uint64_t {
  kTagInit = 1,
  kTagPaths = 2,
  kTagBatch = 3,
  kTagDescent = 4,
  kTagAscent = 5,
  kTagRecord = 6,
};

template <typename P>
void rmsprop_core(P& param, const P& grad, P& acc, double lr, double decay, double eps) {
  MARTNET_REQUIRE(param.rows() == grad.rows() && param.cols() == grad.cols() &&
                      param.rows() == acc.rows() && param.cols() == acc.cols(),
                  "rmsprop_step: shape mismatch");
  acc.array() = decay * acc.array() + (1.0 - decay) * grad.array().square();
  param.array() -= lr * grad.array() / (acc.array().sqrt() + eps);
}

}  // namespace

void rmsprop_step(Matrix& param, const Matrix& grad, Matrix& acc, double lr, double decay,
                  double eps) {
  rmsprop_core(param, grad, acc, lr, decay, eps);
}

void rmsprop_step(Vector& param, const Vector& grad, Vector& acc, double lr, double decay,
                  double eps) {
  rmsprop_core(param, grad, acc, lr, decay, eps);
}

LrPoint lr_schedule(Index i, Index total_epochs, Index d, double delta4) {
  MARTNET_REQUIRE(i >= 0 && i <= total_epochs, "lr_schedule: epoch outside [0, I]");
  MARTNET_REQUIRE(d >= 1, "lr_schedule: d must be positive");
  const double frac = static_cast<double>(i) / static_cast<double>(total_epochs);
  const double decay = std::pow(0.01, frac);
  const double dd = static_cast<double>(d);
  const double d0 = (d <= 1000) ? 3.0 * std::pow(dd, -0.5) : 3.0 * std::pow(dd, -0.8);
  LrPoint lr;
  lr.d1 = lr.d2 = d0 * 1e-3 * decay;
  lr.d3 = 1e-2 * decay;
  lr.d4 = delta4;
  return lr;
}

Index TrainConfig::batch_size_at(Index epoch) const {
  for (const auto& stage : batch_schedule) {
    if (static_cast<double>(epoch) < stage.upto_frac * static_cast<double>(epochs)) {
      return stage.size;
    }
  }
  return batch_schedule.back().size;
}

void TrainConfig::validate() const {
  MARTNET_REQUIRE(epochs >= 1 && descent_steps >= 1 && ascent_steps >= 1,
                  "TrainConfig: I, J, K must all be >= 1");
  MARTNET_REQUIRE(lambda_cap >= lambda0 && lambda0 >= 0.0,
                  "TrainConfig: need lambda_cap >= lambda0 >= 0");
  MARTNET_REQUIRE(n_steps >= 1 && n_paths >= 1, "TrainConfig: N and M must be >= 1");
  MARTNET_REQUIRE(delta4 >= 0.0 && rms_decay > 0.0 && rms_decay < 1.0 && rms_eps > 0.0,
                  "TrainConfig: bad optimizer constants");
  MARTNET_REQUIRE(!batch_schedule.empty(), "TrainConfig: empty batch schedule");
  double prev = 0.0;
  for (const auto& stage : batch_schedule) {
    MARTNET_REQUIRE(stage.size >= 1, "TrainConfig: batch sizes must be >= 1");
    MARTNET_REQUIRE(stage.upto_frac > prev, "TrainConfig: batch stages must be increasing");
    prev = stage.upto_frac;
  }
  MARTNET_REQUIRE(prev >= 1.0, "TrainConfig: last batch stage must cover the run");
  MARTNET_REQUIRE(adversarial_width >= 1, "TrainConfig: adversarial width must be >= 1");
}

RmsMlp RmsMlp::zero_like(const MlpNet& net) {
  RmsMlp r;
  for (const auto& w : net.w) r.w.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : net.b) r.b.push_back(Vector::Zero(b.size()));
  return r;
}

RmsAdv RmsAdv::zero_like(const AdversarialNet& net) {
  RmsAdv r;
  r.w_t = Vector::Zero(net.w_t.size());
  r.w_x = Matrix::Zero(net.w_x.rows(), net.w_x.cols());
  r.bias = Vector::Zero(net.bias.size());
  return r;
}

TrainState init_train_state(const ProblemSpec& spec, const TrainConfig& cfg) {
  RngStream root(cfg.seed);
  RngStream init = root.split(kTagInit);
  TrainState state;
  state.value = make_value_net(spec, init.split(0));
  state.control = make_control_net(spec, init.split(1));
  state.adversarial = make_adversarial_net(cfg.adversarial_width, spec, init.split(2));
  state.lambda = cfg.lambda0;

  // Level calibration: shift the value body's output bias to the mean
  // terminal value over a one-step cloud of horizon states under the initial
  // control, so training fits shape and time variation instead of climbing a
  // large constant offset through the learning-rate budget.
  if (cfg.warm_start_value) {
    const EvalGrid grid = build_eval_grid(spec.d, cfg.points_per_segment);
    RngStream level_rng = init.split(3);
    const Index samples = 1024;
    double level = 0.0;
    for (Index i = 0; i < samples; ++i) {
      const Vector x0 = grid.points.col(i % grid.size());
      const Vector u0 = state.control.control(0.0, x0);
      const Vector z = std::sqrt(spec.T) * sample_gaussian(level_rng, spec.q);
      const Vector x_end = x0 + eval_drift(spec, 0.0, x0, u0) * spec.T +
                           eval_diffusion_apply(spec, 0.0, x0, u0, z);
      level += spec.terminal(x_end);
    }
    state.value.body.b.back()[0] += level / static_cast<double>(samples);
  }

  state.rms_value = RmsMlp::zero_like(state.value.body);
  state.rms_control = RmsMlp::zero_like(state.control.body);
  state.rms_adv = RmsAdv::zero_like(state.adversarial);
  return state;
}

namespace {

void apply_mlp(MlpNet& net, const MlpGrad& grad, RmsMlp& rms, double lr, const TrainConfig& cfg) {
  for (size_t l = 0; l < net.w.size(); ++l) {
    rmsprop_step(net.w[l], grad.w[l], rms.w[l], lr, cfg.rms_decay, cfg.rms_eps);
    rmsprop_step(net.b[l], grad.b[l], rms.b[l], lr, cfg.rms_decay, cfg.rms_eps);
  }
}

void check_finite(const LossGrads& ev, Index epoch, const TrainingRecord& last) {
  if (!std::isfinite(ev.loss.mean_value)) throw TrainAbortError(epoch, "mean-of-value term", last);
  if (!std::isfinite(ev.loss.mart_scalar)) throw TrainAbortError(epoch, "martingale term", last);
  if (!std::isfinite(ev.loss.total)) throw TrainAbortError(epoch, "total loss", last);
}

}  // namespace

LossGrads descent_substep(TrainState& state, const Objective& obj, const PathPool& pool,
                          const Minibatch& batch, const LrPoint& lr, const TrainConfig& cfg,
                          RngStream rng) {
  LossGrads ev = loss_gradients(obj, pool, batch, state.value, state.control, state.adversarial,
                                state.lambda, rng);
  apply_mlp(state.control.body, ev.control, state.rms_control, lr.d1, cfg);
  apply_mlp(state.value.body, ev.value, state.rms_value, lr.d2, cfg);
  return ev;
}

LossGrads ascent_substep(TrainState& state, const Objective& obj, const PathPool& pool,
                         const Minibatch& batch, const LrPoint& lr, const TrainConfig& cfg,
                         RngStream rng) {
  LossGrads ev = loss_gradients(obj, pool, batch, state.value, state.control, state.adversarial,
                                state.lambda, rng);
  // Ascent on the test-function parameters: negative lr flips the update.
  rmsprop_step(state.adversarial.w_t, ev.adversarial.w_t, state.rms_adv.w_t, -lr.d3,
               cfg.rms_decay, cfg.rms_eps);
  rmsprop_step(state.adversarial.w_x, ev.adversarial.w_x, state.rms_adv.w_x, -lr.d3,
               cfg.rms_decay, cfg.rms_eps);
  rmsprop_step(state.adversarial.bias, ev.adversarial.bias, state.rms_adv.bias, -lr.d3,
               cfg.rms_decay, cfg.rms_eps);
  // Multiplier growth tracks the violation estimate. The single-draw
  // |G|^2 is variance-inflated at small batches and races lambda to its cap
  // before the mean-of-value pressure can steer the control, so the paired
  // evaluation uses the unbiased cross product, clipped to keep lambda
  // nondecreasing.
  double g_sq = ev.loss.mart_scalar * ev.loss.mart_scalar;
  if (obj.paired_gradient && ev.loss.lambda > 0.0) {
    g_sq = std::max(0.0, ev.loss.penalty / ev.loss.lambda);
  }
  state.lambda = std::min(cfg.lambda_cap, state.lambda + lr.d4 * g_sq);
  return ev;
}

std::vector<double> candidate_values(const ValueNet& value, const EvalGrid& grid) {
  const Matrix tx =
      stack_time_state(Eigen::RowVectorXd::Zero(grid.size()), grid.points);
  const Matrix out = value.body.forward(tx);
  std::vector<double> vals(static_cast<size_t>(grid.size()));
  for (Index i = 0; i < grid.size(); ++i) vals[static_cast<size_t>(i)] = out(0, i);
  return vals;
}

TrainState train(const ProblemSpec& spec, const TrainConfig& cfg, const OracleAttachment* oracle,
                 const EpochCallback& on_epoch) {
  cfg.validate();
  TrainState state = init_train_state(spec, cfg);

  Objective obj;
  obj.spec = &spec;
  obj.rdo.h = spec.T / static_cast<double>(cfg.n_steps);
  obj.rdo.law = cfg.noise_kind == NoiseLaw::Kind::Gaussian
                    ? NoiseLaw::gaussian(spec.q)
                    : NoiseLaw::three_point(spec.q, cfg.noise_r);
  obj.g_mode = cfg.g_mode;
  obj.set_penalty_weight = cfg.set_penalty_weight;
  obj.paired_gradient = cfg.paired_gradient;

  const EvalGrid grid = build_eval_grid(spec.d, cfg.points_per_segment);
  if (oracle) {
    MARTNET_REQUIRE(static_cast<Index>(oracle->reference.size()) == grid.size() &&
                        oracle->denom > 0.0,
                    "train: oracle attachment does not match the evaluation grid");
  }
  RngStream root(cfg.seed);

  PathPool pool;
  TrainingRecord last{};
  const auto started = std::chrono::steady_clock::now();

  for (Index i = 0; i < cfg.epochs; ++i) {
    if (i == 0 || !cfg.freeze_paths) {
      pool = generate_paths(spec, state.control, grid, cfg.n_steps, cfg.n_paths,
                            root.split(kTagPaths).split(static_cast<std::uint64_t>(i)),
                            static_cast<int>(i));
    }
    RngStream batch_rng = root.split(kTagBatch).split(static_cast<std::uint64_t>(i));
    const Minibatch batch = draw_minibatch(pool, cfg.batch_size_at(i), batch_rng);
    const LrPoint lr = lr_schedule(i, cfg.epochs, spec.d, cfg.delta4);

    for (Index j = 0; j < cfg.descent_steps; ++j) {
      RngStream st =
          root.split(kTagDescent).split(static_cast<std::uint64_t>(i)).split(static_cast<std::uint64_t>(j));
      const LossGrads ev = descent_substep(state, obj, pool, batch, lr, cfg, st);
      check_finite(ev, i, last);
    }
    for (Index k = 0; k < cfg.ascent_steps; ++k) {
      RngStream st =
          root.split(kTagAscent).split(static_cast<std::uint64_t>(i)).split(static_cast<std::uint64_t>(k));
      const LossGrads ev = ascent_substep(state, obj, pool, batch, lr, cfg, st);
      check_finite(ev, i, last);
    }

    // Post-update snapshot over the whole pool, fresh draws, no parameter
    // change; the full-pool average keeps the record close to the actual
    // weak-form violation instead of minibatch noise.
    const PoolStats snap =
        martingale_pool_stats(obj, pool, state.value, state.control, state.adversarial,
                              root.split(kTagRecord).split(static_cast<std::uint64_t>(i)),
                              cfg.record_draw_sets);

    TrainingRecord rec;
    rec.epoch = i;
    rec.mart_loss = snap.mart_scalar;
    rec.mean_value = snap.mean_value;
    if (oracle) {
      const std::vector<double> cand = candidate_values(state.value, grid);
      double num = 0.0;
      for (size_t p = 0; p < cand.size(); ++p) num += std::abs(cand[p] - oracle->reference[p]);
      rec.rel_error = num / oracle->denom;
    }
    if (cfg.record_timing) {
      rec.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    if (!std::isfinite(rec.mart_loss) || !std::isfinite(rec.mean_value)) {
      throw TrainAbortError(i, "post-epoch snapshot", last);
    }
    state.epoch = i + 1;
    state.history.push_back(rec);
    last = rec;
    if (on_epoch) on_epoch(state, rec);
  }
  return state;
}

}  // namespace martnet
