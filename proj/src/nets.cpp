#include "martnet/nets.hpp"

#include <cmath>

namespace martnet {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

MlpNet MlpNet::glorot(const std::vector<Index>& sizes, RngStream rng) {
  MARTNET_REQUIRE(sizes.size() >= 2, "MlpNet: need at least input and output sizes");
  MlpNet net;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const Index fan_in = sizes[l];
    const Index fan_out = sizes[l + 1];
    MARTNET_REQUIRE(fan_in >= 1 && fan_out >= 1, "MlpNet: layer sizes must be positive");
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (Index i = 0; i < fan_out; ++i)
      for (Index j = 0; j < fan_in; ++j) w(i, j) = s * (2.0 * rng.uniform_co() - 1.0);
    net.w.push_back(std::move(w));
    net.b.push_back(Vector::Zero(fan_out));
  }
  return net;
}

Matrix MlpNet::forward(const Matrix& input) const {
  MARTNET_REQUIRE(input.rows() == input_dim(), "MlpNet::forward: input dimension mismatch");
  Matrix a = input;
  const Index L = layer_count();
  for (Index l = 0; l < L; ++l) {
    Matrix z = (w[static_cast<size_t>(l)] * a).colwise() + b[static_cast<size_t>(l)];
    if (l + 1 < L) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Matrix MlpNet::forward(const Matrix& input, MlpWorkspace& ws) const {
  MARTNET_REQUIRE(input.rows() == input_dim(), "MlpNet::forward: input dimension mismatch");
  const Index L = layer_count();
  ws.input = input;
  ws.pre.assign(static_cast<size_t>(L), Matrix());
  ws.act.assign(static_cast<size_t>(L), Matrix());
  const Matrix* a = &ws.input;
  for (Index l = 0; l < L; ++l) {
    ws.pre[static_cast<size_t>(l)] =
        (w[static_cast<size_t>(l)] * (*a)).colwise() + b[static_cast<size_t>(l)];
    if (l + 1 < L) {
      ws.act[static_cast<size_t>(l)] = ws.pre[static_cast<size_t>(l)].cwiseMax(0.0);
      a = &ws.act[static_cast<size_t>(l)];
    }
  }
  return ws.pre.back();
}

Matrix MlpNet::backward(const MlpWorkspace& ws, const Matrix& upstream, MlpGrad& grad) const {
  const Index L = layer_count();
  MARTNET_REQUIRE(!ws.pre.empty(), "MlpNet::backward: no cached forward pass");
  MARTNET_REQUIRE(upstream.rows() == output_dim() && upstream.cols() == ws.input.cols(),
                  "MlpNet::backward: upstream shape mismatch");
  Matrix delta = upstream;
  for (Index l = L - 1; l >= 0; --l) {
    const size_t sl = static_cast<size_t>(l);
    const Matrix& below = (l == 0) ? ws.input : ws.act[sl - 1];
    grad.w[sl].noalias() += delta * below.transpose();
    grad.b[sl] += delta.rowwise().sum();
    Matrix down = w[sl].transpose() * delta;
    if (l == 0) return down;
    // ReLU gate of the layer below.
    delta = down.cwiseProduct((ws.pre[sl - 1].array() > 0.0).cast<double>().matrix());
  }
  return {};
}

MlpGrad MlpNet::zero_grad() const {
  MlpGrad g;
  for (const auto& wi : w) g.w.push_back(Matrix::Zero(wi.rows(), wi.cols()));
  for (const auto& bi : b) g.b.push_back(Vector::Zero(bi.size()));
  return g;
}

double ValueNet::value(double t, const Vector& x) const {
  if (t < 0.0 || t > horizon) throw std::domain_error("ValueNet::value: t outside [0, T]");
  if (t == horizon) return terminal(x);
  return body.forward(stack_time_state(t, x))(0, 0);
}

Vector ControlNet::control(double t, const Vector& x) const {
  const Vector psi = body.forward(stack_time_state(t, x)).col(0);
  if (!squash) return psi;
  const Vector gate = psi.cwiseMax(0.0).cwiseMin(6.0);
  return lo + (hi - lo).cwiseProduct(gate) / 6.0;
}

Matrix ControlNet::control_batch(const Matrix& tx, MlpWorkspace* ws, Matrix* psi_out) const {
  Matrix psi = ws ? body.forward(tx, *ws) : body.forward(tx);
  if (psi_out) *psi_out = psi;
  if (!squash) return psi;
  Matrix gate = psi.cwiseMax(0.0).cwiseMin(6.0);
  Matrix u = gate.array().colwise() * ((hi - lo).array() / 6.0);
  u.colwise() += lo;
  return u;
}

Matrix ControlNet::squash_deriv(const Matrix& psi) const {
  if (!squash) return Matrix::Ones(psi.rows(), psi.cols());
  Matrix open = ((psi.array() > 0.0) && (psi.array() < 6.0)).cast<double>();
  return open.array().colwise() * ((hi - lo).array() / 6.0);
}

AdversarialNet AdversarialNet::init(Index r, Index d, RngStream rng) {
  MARTNET_REQUIRE(r >= 1 && d >= 1, "AdversarialNet: r and d must be positive");
  AdversarialNet net;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  net.w_t = scale * sample_gaussian(rng, r);
  net.w_x.resize(r, d);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < d; ++j) net.w_x(i, j) = scale * rng.gaussian();
  net.bias.resize(r);
  for (Index i = 0; i < r; ++i) net.bias[i] = kTwoPi * rng.uniform_co();
  return net;
}

Vector AdversarialNet::eval(double t, const Vector& x) const {
  return (w_t * t + w_x * x + bias).array().sin();
}

Matrix AdversarialNet::eval_batch(const Eigen::RowVectorXd& t_row, const Matrix& x,
                                  Matrix* pre) const {
  Matrix z = w_x * x;
  z.noalias() += w_t * t_row;
  z.colwise() += bias;
  if (pre) *pre = z;
  return z.array().sin();
}

AdvGrad adversarial_zero_grad(const AdversarialNet& net) {
  AdvGrad g;
  g.w_t = Vector::Zero(net.w_t.size());
  g.w_x = Matrix::Zero(net.w_x.rows(), net.w_x.cols());
  g.bias = Vector::Zero(net.bias.size());
  return g;
}

void adversarial_backward(const AdversarialNet& net, const Eigen::RowVectorXd& t_row,
                          const Matrix& x, const Matrix& pre, const Matrix& upstream,
                          AdvGrad& grad) {
  MARTNET_REQUIRE(upstream.rows() == net.width() && upstream.cols() == x.cols(),
                  "adversarial_backward: upstream shape mismatch");
  const Matrix dz = upstream.cwiseProduct(pre.array().cos().matrix());
  grad.w_t.noalias() += dz * t_row.transpose();
  grad.w_x.noalias() += dz * x.transpose();
  grad.bias += dz.rowwise().sum();
}

namespace {
std::vector<Index> hidden_sizes(Index d, Index out) {
  const Index width = 2 * d + 20;
  return {d + 1, width, width, width, width, out};
}
}  // namespace

ValueNet make_value_net(const ProblemSpec& spec, RngStream rng) {
  ValueNet v;
  v.body = MlpNet::glorot(hidden_sizes(spec.d, 1), rng);
  v.terminal = spec.terminal;
  v.terminal_grad = spec.terminal_grad;
  v.horizon = spec.T;
  return v;
}

ControlNet make_control_net(const ProblemSpec& spec, RngStream rng) {
  ControlNet c;
  c.body = MlpNet::glorot(hidden_sizes(spec.d, spec.m), rng);
  c.lo = spec.control_lo;
  c.hi = spec.control_hi;
  c.squash = !spec.general_set;
  if (c.squash) c.body.b.back().setConstant(3.0);  // relu6 midpoint => u starts at box centre
  return c;
}

AdversarialNet make_adversarial_net(Index r, const ProblemSpec& spec, RngStream rng) {
  return AdversarialNet::init(r, spec.d, rng);
}

Matrix stack_time_state(const Eigen::RowVectorXd& t_row, const Matrix& x) {
  Matrix tx(x.rows() + 1, x.cols());
  tx.row(0) = t_row;
  tx.bottomRows(x.rows()) = x;
  return tx;
}

Vector stack_time_state(double t, const Vector& x) {
  Vector tx(x.size() + 1);
  tx[0] = t;
  tx.tail(x.size()) = x;
  return tx;
}

}  // namespace martnet
