#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "martnet/objective.hpp"

namespace martnet {

// RMSProp: acc <- decay acc + (1-decay) grad^2; p <- p - lr grad/(sqrt(acc)+eps).
// A negative lr turns the same update into an ascent step.
void rmsprop_step(Matrix& param, const Matrix& grad, Matrix& acc, double lr, double decay,
                  double eps);
void rmsprop_step(Vector& param, const Vector& grad, Vector& acc, double lr, double decay,
                  double eps);

struct LrPoint {
  double d1 = 0.0;  // control
  double d2 = 0.0;  // value
  double d3 = 0.0;  // adversarial
  double d4 = 0.0;  // multiplier
};

// d1 = d2 = d0 * 1e-3 * 0.01^{i/I} with d0 = 3 d^{-1/2} (d <= 1000) else
// 3 d^{-0.8}; d3 = 1e-2 * 0.01^{i/I}; d4 constant.
LrPoint lr_schedule(Index i, Index total_epochs, Index d, double delta4 = 10.0);

struct BatchStage {
  double upto_frac = 1.0;  // applies while epoch < upto_frac * I
  Index size = 0;
};

struct TrainConfig {
  Index epochs = 500;        // I
  Index descent_steps = 2;   // J
  Index ascent_steps = 1;    // K
  Index n_steps = 50;        // N
  Index n_paths = 1024;      // M
  Index points_per_segment = 51;
  Index adversarial_width = 64;
  std::vector<BatchStage> batch_schedule{{0.5, 128}, {1.0, 256}};
  double lambda0 = 10.0;
  double lambda_cap = 1e3;
  double delta4 = 10.0;
  double rms_decay = 0.9;
  double rms_eps = 1e-8;
  bool freeze_paths = false;
  GMode g_mode = GMode::VectorNorm;
  double set_penalty_weight = 0.0;
  bool paired_gradient = true;   // two-sample estimator of lambda |E G|^2
  Index record_draw_sets = 2;    // noise averaging in the history snapshot
  bool warm_start_value = true;  // calibrate the value output level at init
  NoiseLaw::Kind noise_kind = NoiseLaw::Kind::Gaussian;
  double noise_r = 1.7320508075688772;
  std::uint64_t seed = 1;
  bool record_timing = true;

  Index batch_size_at(Index epoch) const;
  void validate() const;
};

struct TrainingRecord {
  Index epoch = 0;
  double mart_loss = 0.0;   // |G|
  double mean_value = 0.0;
  double rel_error = std::numeric_limits<double>::quiet_NaN();  // NaN when no oracle attached
  double wall_time_s = 0.0;
};

struct RmsMlp {
  std::vector<Matrix> w;
  std::vector<Vector> b;
  static RmsMlp zero_like(const MlpNet& net);
};

struct RmsAdv {
  Vector w_t;
  Matrix w_x;
  Vector bias;
  static RmsAdv zero_like(const AdversarialNet& net);
};

struct TrainState {
  ValueNet value;
  ControlNet control;
  AdversarialNet adversarial;
  double lambda = 0.0;
  Index epoch = 0;
  RmsMlp rms_value, rms_control;
  RmsAdv rms_adv;
  std::vector<TrainingRecord> history;
};

// Thrown when a loss term stops being finite; carries the diagnostic record.
struct TrainAbortError : std::runtime_error {
  TrainAbortError(Index epoch_, std::string term_, TrainingRecord last_)
      : std::runtime_error("training aborted at epoch " + std::to_string(epoch_) +
                           ": non-finite " + term_),
        epoch(epoch_),
        term(std::move(term_)),
        last(last_) {}
  Index epoch;
  std::string term;
  TrainingRecord last;
};

// Reference values at t = 0 on the evaluation grid, for per-epoch error
// tracking. denom = sum |ref|.
struct OracleAttachment {
  std::vector<double> reference;
  double denom = 0.0;
};

using EpochCallback = std::function<void(const TrainState&, const TrainingRecord&)>;

TrainState init_train_state(const ProblemSpec& spec, const TrainConfig& cfg);

// One J-block descent sub-step / one K-block ascent sub-step, exposed so the
// descent/ascent behaviours can be probed in isolation.
LossGrads descent_substep(TrainState& state, const Objective& obj, const PathPool& pool,
                          const Minibatch& batch, const LrPoint& lr, const TrainConfig& cfg,
                          RngStream rng);
LossGrads ascent_substep(TrainState& state, const Objective& obj, const PathPool& pool,
                         const Minibatch& batch, const LrPoint& lr, const TrainConfig& cfg,
                         RngStream rng);

TrainState train(const ProblemSpec& spec, const TrainConfig& cfg,
                 const OracleAttachment* oracle = nullptr,
                 const EpochCallback& on_epoch = nullptr);

// Candidate values v(0, x) over the grid columns.
std::vector<double> candidate_values(const ValueNet& value, const EvalGrid& grid);

}  // namespace martnet
