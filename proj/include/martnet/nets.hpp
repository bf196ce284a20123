#pragma once

#include <vector>

#include "martnet/problem.hpp"
#include "martnet/rng.hpp"
#include "martnet/types.hpp"

namespace martnet {

// Per-layer parameter gradients, shape-congruent with an MlpNet.
struct MlpGrad {
  std::vector<Matrix> w;
  std::vector<Vector> b;
  void set_zero() {
    for (auto& m : w) m.setZero();
    for (auto& v : b) v.setZero();
  }
};

// Cached forward pass for one batch (samples are columns).
struct MlpWorkspace {
  Matrix input;
  std::vector<Matrix> pre;  // pre-activations per layer
  std::vector<Matrix> act;  // hidden activations (post-ReLU)
};

// Dense feed-forward net, ReLU hidden units, identity output. Parameters are
// plain Eigen blocks; backward() is exact reverse mode and also returns the
// cotangent at the input so callers can chain through evaluation points that
// depend on other parameters.
struct MlpNet {
  std::vector<Matrix> w;  // w[l]: sizes[l+1] x sizes[l]
  std::vector<Vector> b;

  static MlpNet glorot(const std::vector<Index>& sizes, RngStream rng);

  Index input_dim() const { return w.front().cols(); }
  Index output_dim() const { return w.back().rows(); }
  Index layer_count() const { return static_cast<Index>(w.size()); }

  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, MlpWorkspace& ws) const;

  // upstream: output_dim x batch cotangent. Accumulates into grad (which must
  // be zero_like() of this net or already partially accumulated) and returns
  // the input cotangent (input_dim x batch). Requires a cached forward pass.
  Matrix backward(const MlpWorkspace& ws, const Matrix& upstream, MlpGrad& grad) const;

  MlpGrad zero_grad() const;
};

// Value function v(t, x): the terminal function exactly at t == horizon
// (hard switch), the network body phi(t, x) strictly before it.
struct ValueNet {
  MlpNet body;  // input [t; x] -> scalar
  std::function<double(const Vector&)> terminal;
  std::function<Vector(const Vector&)> terminal_grad;
  double horizon = 0.0;

  double value(double t, const Vector& x) const;
};

// Feedback control clamped to the box via u = lo + (hi-lo)/6 * relu6(psi).
// squash == false is the general-control-set mode (raw psi output, penalty
// handled by the objective).
struct ControlNet {
  MlpNet body;  // input [t; x] -> m
  Vector lo, hi;
  bool squash = true;

  Vector control(double t, const Vector& x) const;
  // tx: (1+d) x batch. ws (optional) caches the body pass; psi_out receives
  // the raw pre-squash outputs needed for the backward chain.
  Matrix control_batch(const Matrix& tx, MlpWorkspace* ws = nullptr,
                       Matrix* psi_out = nullptr) const;
  // d(u)/d(psi) elementwise, given raw psi outputs.
  Matrix squash_deriv(const Matrix& psi) const;
};

// Shallow test-function family rho(t, x) = sin(w_t * t + w_x * x + bias),
// r outputs, all in [-1, 1].
struct AdversarialNet {
  Vector w_t;   // r
  Matrix w_x;   // r x d
  Vector bias;  // r

  Index width() const { return w_t.size(); }
  Index state_dim() const { return w_x.cols(); }

  static AdversarialNet init(Index r, Index d, RngStream rng);

  Vector eval(double t, const Vector& x) const;
  // t_row: 1 x batch, x: d x batch; pre receives w_t*t + w_x*x + bias.
  Matrix eval_batch(const Eigen::RowVectorXd& t_row, const Matrix& x, Matrix* pre = nullptr) const;
};

struct AdvGrad {
  Vector w_t;
  Matrix w_x;
  Vector bias;
  void set_zero() {
    w_t.setZero();
    w_x.setZero();
    bias.setZero();
  }
};

AdvGrad adversarial_zero_grad(const AdversarialNet& net);

// Reverse mode for the sine layer: upstream is r x batch on the outputs.
void adversarial_backward(const AdversarialNet& net, const Eigen::RowVectorXd& t_row,
                          const Matrix& x, const Matrix& pre, const Matrix& upstream,
                          AdvGrad& grad);

// Standard factories for a given problem: 4 hidden layers of width 2d+20.
// The control body's final bias starts at the squash midpoint so the initial
// policy sits at the box centre instead of a saturated corner.
ValueNet make_value_net(const ProblemSpec& spec, RngStream rng);
ControlNet make_control_net(const ProblemSpec& spec, RngStream rng);
AdversarialNet make_adversarial_net(Index r, const ProblemSpec& spec, RngStream rng);

// [t; x] column assembly helpers.
Matrix stack_time_state(const Eigen::RowVectorXd& t_row, const Matrix& x);
Vector stack_time_state(double t, const Vector& x);

}  // namespace martnet
