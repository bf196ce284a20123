#pragma once

#include "martnet/nets.hpp"
#include "martnet/paths.hpp"
#include "martnet/rdo.hpp"

namespace martnet {

// How the r per-test-function averages collapse into the penalty:
//   VectorNorm: penalty = lambda * |Gbar|^2 (each output is a constraint)
//   ScalarSum:  penalty = lambda * (sum_j Gbar_j)^2
enum class GMode { VectorNorm, ScalarSum };

struct Objective {
  const ProblemSpec* spec = nullptr;
  RdoConfig rdo;
  GMode g_mode = GMode::VectorNorm;
  double set_penalty_weight = 0.0;
  // Training-gradient estimator. A single draw set descends the minibatch
  // value lambda |Gbar|^2 whose expectation carries the estimator variance
  // lambda r Var(rho R)/|A| on top of the weak-form violation; at small
  // batches that variance term dominates and the descent mostly suppresses
  // the sampling noise of R (flattening v). With paired draws the loss is
  // lambda G1.G2 over two independent noise sets, an unbiased estimate of
  // lambda |E G|^2, and its gradient carries no variance pressure.
  bool paired_gradient = false;
};

struct LossBreakdown {
  double mean_value = 0.0;   // (1/|A|) sum v(t_n, X_n^m) dt
  double mart_scalar = 0.0;  // |G_eff| (first draw set)
  double lambda = 0.0;
  double set_penalty = 0.0;  // 0 for box-constrained problems
  double total = 0.0;        // mean_value + penalty + weight * set_penalty
  Vector g_vec;              // per-output averages Gbar (first draw set)
  // Penalty term actually entering `total`: lambda |G_eff|^2 for the
  // single-draw estimator, lambda G1.G2 (possibly negative) for the paired
  // one.
  double penalty = 0.0;
};

struct LossGrads {
  MlpGrad control;      // d total / d alpha
  MlpGrad value;        // d total / d theta
  AdvGrad adversarial;  // d total / d eta (ascent direction is +)
  LossBreakdown loss;
};

// Per-output averages Gbar_j = (1/|A|) sum rho_j(t_n, X_n^m) R_{n,m}, one
// fresh noise draw per element (element k uses rng.split(k)).
Vector martingale_vector(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                         const ValueNet& value, const ControlNet& control,
                         const AdversarialNet& adversarial, RngStream rng);

// Scalar G with the product summed over the r outputs.
double martingale_term(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                       const ValueNet& value, const ControlNet& control,
                       const AdversarialNet& adversarial, RngStream rng);

LossBreakdown full_loss(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                        const ValueNet& value, const ControlNet& control,
                        const AdversarialNet& adversarial, double lambda, RngStream rng);

// Exact reverse-mode gradients of the full loss. The jump endpoint
// x + mu(t,x,u_alpha) h + sigma(t,x,u_alpha) sqrt(h) W is a function of
// alpha, so the value evaluation there chains back into the control
// parameters (and through the analytic terminal gradient when the step
// lands on the horizon).
LossGrads loss_gradients(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                         const ValueNet& value, const ControlNet& control,
                         const AdversarialNet& adversarial, double lambda, RngStream rng);

// (1/|A|) sum dist(u(t_n, X_n^m), U) for general-set problems.
double control_set_penalty(const ProblemSpec& spec, const ControlNet& control,
                           const PathPool& pool, const Minibatch& batch);

// Low-noise diagnostic over the whole pool: Gbar and the mean-of-value term
// computed across every (n, m) pair in fixed chunks, one fresh draw per
// element. The estimator noise of |G| shrinks like 1/sqrt(N M), so epoch
// records track the violation instead of minibatch sampling noise.
struct PoolStats {
  Vector g_vec;
  double mart_scalar = 0.0;  // |G_eff| under the objective's g_mode
  double mean_value = 0.0;
};

PoolStats martingale_pool_stats(const Objective& obj, const PathPool& pool, const ValueNet& value,
                                const ControlNet& control, const AdversarialNet& adversarial,
                                RngStream rng, Index draw_sets = 1);

// Injected-function route used by tests and diagnostics: value / control /
// test-function fields supplied as plain callables, same draw discipline and
// same arithmetic as the pointwise residual.
using VectorField = std::function<Vector(double, const Vector&)>;

Vector martingale_vector_fns(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                             const ScalarField& value_fn, const VectorField& control_fn,
                             const VectorField& rho_fn, RngStream rng);

}  // namespace martnet
