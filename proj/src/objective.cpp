#include "martnet/objective.hpp"

#include <cmath>

namespace martnet {

namespace {

struct GatheredBatch {
  Eigen::RowVectorXd t_now;    // 1 x B
  std::vector<double> t_next;  // per element, horizon-exact at the last step
  Matrix x;                    // d x B
};

GatheredBatch gather(const PathPool& pool, const Minibatch& batch) {
  const Index b = batch.size();
  MARTNET_REQUIRE(b >= 1, "objective: empty minibatch");
  GatheredBatch g;
  g.t_now.resize(b);
  g.t_next.resize(static_cast<size_t>(b));
  g.x.resize(pool.states[0].rows(), b);
  for (Index k = 0; k < b; ++k) {
    const auto [n, m] = batch.items[static_cast<size_t>(k)];
    MARTNET_REQUIRE(n >= 0 && n < pool.n_steps && m >= 0 && m < pool.n_paths,
                    "objective: batch index outside pool");
    g.t_now[k] = pool.times[static_cast<size_t>(n)];
    g.t_next[static_cast<size_t>(k)] = pool.times[static_cast<size_t>(n) + 1];
    g.x.col(k) = pool.states[static_cast<size_t>(n)].col(m);
  }
  return g;
}

// One forward evaluation of the minibatch under one fresh draw set.
// grads == nullptr skips gradient work entirely; dg_external, when given,
// replaces the built-in d(total)/d(Gbar) (used by the paired estimator), and
// with_direct_terms gates the mean-of-value and set-penalty gradient
// contributions so they enter exactly once per combined evaluation.
LossBreakdown evaluate(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                       const ValueNet& value, const ControlNet& control,
                       const AdversarialNet& adversarial, double lambda, RngStream rng,
                       LossGrads* grads, const Vector* dg_external = nullptr,
                       bool with_direct_terms = true) {
  const ProblemSpec& spec = *obj.spec;
  const double h = obj.rdo.h;
  MARTNET_REQUIRE(h == pool.h, "objective: rdo step differs from the pool grid step");
  MARTNET_REQUIRE(lambda >= 0.0, "objective: lambda must be nonnegative");

  const Index b = batch.size();
  const GatheredBatch gb = gather(pool, batch);
  const Matrix tx_now = stack_time_state(gb.t_now, gb.x);

  MlpWorkspace ws_u;
  Matrix psi;
  const Matrix u = control.control_batch(tx_now, grads ? &ws_u : nullptr, grads ? &psi : nullptr);

  // One fresh draw per element; per-element streams keep the evaluation
  // independent of traversal order.
  const double sqrt_h = std::sqrt(h);
  Matrix noise_scaled(spec.q, b);
  Matrix y(spec.d, b);
  Vector cost(b);
  for (Index k = 0; k < b; ++k) {
    RngStream st = rng.split(static_cast<std::uint64_t>(k));
    const Vector w = sample_noise(obj.rdo.law, st);
    noise_scaled.col(k) = sqrt_h * w;
    const Vector xk = gb.x.col(k);
    const Vector uk = u.col(k);
    const Vector xi = eval_drift(spec, gb.t_now[k], xk, uk) * h +
                      eval_diffusion_apply(spec, gb.t_now[k], xk, uk, noise_scaled.col(k));
    y.col(k) = xk + xi;
    cost[k] = spec.cost(gb.t_now[k], xk, uk);
  }

  MlpWorkspace ws_v0;
  const Matrix v_now = grads ? value.body.forward(tx_now, ws_v0) : value.body.forward(tx_now);

  // Successor evaluations: network body strictly inside the horizon, exact
  // terminal function on it.
  std::vector<Index> interior, at_terminal;
  for (Index k = 0; k < b; ++k) {
    (gb.t_next[static_cast<size_t>(k)] == spec.T ? at_terminal : interior).push_back(k);
  }

  Vector v_next(b);
  MlpWorkspace ws_v1;
  Matrix tx_next_int;
  if (!interior.empty()) {
    Eigen::RowVectorXd t_row(static_cast<Index>(interior.size()));
    Matrix y_int(spec.d, static_cast<Index>(interior.size()));
    for (size_t i = 0; i < interior.size(); ++i) {
      t_row[static_cast<Index>(i)] = gb.t_next[static_cast<size_t>(interior[i])];
      y_int.col(static_cast<Index>(i)) = y.col(interior[i]);
    }
    tx_next_int = stack_time_state(t_row, y_int);
    const Matrix out =
        grads ? value.body.forward(tx_next_int, ws_v1) : value.body.forward(tx_next_int);
    for (size_t i = 0; i < interior.size(); ++i) v_next[interior[i]] = out(0, static_cast<Index>(i));
  }
  for (const Index k : at_terminal) v_next[k] = value.terminal(y.col(k));

  const Vector residual = (v_next - v_now.transpose().col(0)) / h + cost;

  Matrix adv_pre;
  const Matrix rho = adversarial.eval_batch(gb.t_now, gb.x, grads ? &adv_pre : nullptr);
  const Vector g_bar = rho * residual / static_cast<double>(b);

  LossBreakdown out;
  out.lambda = lambda;
  out.mean_value = v_now.sum() * h / static_cast<double>(b);
  const double g_sq =
      obj.g_mode == GMode::VectorNorm ? g_bar.squaredNorm() : g_bar.sum() * g_bar.sum();
  out.mart_scalar = std::sqrt(g_sq);
  out.g_vec = g_bar;
  out.penalty = lambda * g_sq;

  const bool set_active = obj.set_penalty_weight > 0.0 && spec.general_set;
  if (set_active) {
    double acc = 0.0;
    for (Index k = 0; k < b; ++k) acc += spec.set_distance(u.col(k));
    out.set_penalty = acc / static_cast<double>(b);
  }
  out.total = out.mean_value + out.penalty + obj.set_penalty_weight * out.set_penalty;

  if (!grads) return out;

  // d total / d Gbar for this draw set.
  Vector d_g(adversarial.width());
  if (dg_external) {
    d_g = *dg_external;
  } else if (obj.g_mode == GMode::VectorNorm) {
    d_g = 2.0 * lambda * g_bar;
  } else {
    d_g.setConstant(2.0 * lambda * g_bar.sum());
  }

  const double inv_b = 1.0 / static_cast<double>(b);
  const Vector omega = rho.transpose() * d_g * inv_b;  // per-element residual weight

  // Test-function parameters.
  const Matrix d_rho = d_g * residual.transpose() * inv_b;
  adversarial_backward(adversarial, gb.t_now, gb.x, adv_pre, d_rho, grads->adversarial);

  // v(t_n, .) carries the mean-of-value weight and -omega/h from the residual.
  Eigen::RowVectorXd up_now = (-omega / h).transpose();
  if (with_direct_terms) up_now.array() += h * inv_b;
  value.body.backward(ws_v0, up_now, grads->value);

  // Successor point: omega/h, with the input cotangent chained into the jump.
  Matrix cot_y = Matrix::Zero(spec.d, b);
  if (!interior.empty()) {
    Eigen::RowVectorXd up_next(static_cast<Index>(interior.size()));
    for (size_t i = 0; i < interior.size(); ++i)
      up_next[static_cast<Index>(i)] = omega[interior[i]] / h;
    const Matrix in_cot = value.body.backward(ws_v1, up_next, grads->value);
    for (size_t i = 0; i < interior.size(); ++i)
      cot_y.col(interior[i]) = in_cot.col(static_cast<Index>(i)).tail(spec.d);
  }
  for (const Index k : at_terminal) {
    cot_y.col(k) = value.terminal_grad(y.col(k)) * (omega[k] / h);
  }

  // Chain into the control: xi = mu h + sigma s, plus the running cost and
  // (when active) the set-distance penalty.
  Matrix cot_u(spec.m, b);
  for (Index k = 0; k < b; ++k) {
    const Vector xk = gb.x.col(k);
    const Vector uk = u.col(k);
    const Vector cy = cot_y.col(k);
    Vector cu = h * spec.drift_ctrl_vjp(gb.t_now[k], xk, uk, cy);
    if (spec.diffusion_ctrl_vjp) {
      cu += spec.diffusion_ctrl_vjp(gb.t_now[k], xk, uk, noise_scaled.col(k), cy);
    }
    cu += omega[k] * spec.cost_ctrl_grad(gb.t_now[k], xk, uk);
    if (set_active && with_direct_terms) {
      cu += (obj.set_penalty_weight * inv_b) * spec.set_distance_grad(uk);
    }
    cot_u.col(k) = cu;
  }
  const Matrix up_psi = cot_u.cwiseProduct(control.squash_deriv(psi));
  control.body.backward(ws_u, up_psi, grads->control);

  return out;
}

double cross_penalty(GMode mode, double lambda, const Vector& g1, const Vector& g2) {
  return mode == GMode::VectorNorm ? lambda * g1.dot(g2)
                                   : lambda * g1.sum() * g2.sum();
}

Vector cross_dg(GMode mode, double lambda, const Vector& other) {
  if (mode == GMode::VectorNorm) return lambda * other;
  return Vector::Constant(other.size(), lambda * other.sum());
}

}  // namespace

Vector martingale_vector(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                         const ValueNet& value, const ControlNet& control,
                         const AdversarialNet& adversarial, RngStream rng) {
  return evaluate(obj, pool, batch, value, control, adversarial, 0.0, rng, nullptr).g_vec;
}

double martingale_term(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                       const ValueNet& value, const ControlNet& control,
                       const AdversarialNet& adversarial, RngStream rng) {
  return martingale_vector(obj, pool, batch, value, control, adversarial, rng).sum();
}

LossBreakdown full_loss(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                        const ValueNet& value, const ControlNet& control,
                        const AdversarialNet& adversarial, double lambda, RngStream rng) {
  if (!obj.paired_gradient) {
    return evaluate(obj, pool, batch, value, control, adversarial, lambda, rng, nullptr);
  }
  LossBreakdown first =
      evaluate(obj, pool, batch, value, control, adversarial, lambda, rng.split(1), nullptr);
  const LossBreakdown second =
      evaluate(obj, pool, batch, value, control, adversarial, lambda, rng.split(2), nullptr);
  first.penalty = cross_penalty(obj.g_mode, lambda, first.g_vec, second.g_vec);
  first.total = first.mean_value + first.penalty + obj.set_penalty_weight * first.set_penalty;
  return first;
}

LossGrads loss_gradients(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                         const ValueNet& value, const ControlNet& control,
                         const AdversarialNet& adversarial, double lambda, RngStream rng) {
  LossGrads grads;
  grads.value = value.body.zero_grad();
  grads.control = control.body.zero_grad();
  grads.adversarial = adversarial_zero_grad(adversarial);

  if (!obj.paired_gradient) {
    grads.loss = evaluate(obj, pool, batch, value, control, adversarial, lambda, rng, &grads);
    return grads;
  }

  // Paired-draw estimator of lambda |E G|^2: a forward-only pass fixes G2,
  // then each draw set is backpropagated against the other's average.
  const LossBreakdown peek =
      evaluate(obj, pool, batch, value, control, adversarial, lambda, rng.split(2), nullptr);
  const Vector dg1 = cross_dg(obj.g_mode, lambda, peek.g_vec);
  LossBreakdown first = evaluate(obj, pool, batch, value, control, adversarial, lambda,
                                 rng.split(1), &grads, &dg1, true);
  const Vector dg2 = cross_dg(obj.g_mode, lambda, first.g_vec);
  evaluate(obj, pool, batch, value, control, adversarial, lambda, rng.split(2), &grads, &dg2,
           false);

  first.penalty = cross_penalty(obj.g_mode, lambda, first.g_vec, peek.g_vec);
  first.total = first.mean_value + first.penalty + obj.set_penalty_weight * first.set_penalty;
  grads.loss = first;
  return grads;
}

double control_set_penalty(const ProblemSpec& spec, const ControlNet& control,
                           const PathPool& pool, const Minibatch& batch) {
  if (!spec.general_set) {
    throw std::logic_error("control_set_penalty: problem uses a box control set");
  }
  double acc = 0.0;
  for (const auto& [n, m] : batch.items) {
    const double t = pool.times[static_cast<size_t>(n)];
    acc += spec.set_distance(control.control(t, pool.states[static_cast<size_t>(n)].col(m)));
  }
  return acc / static_cast<double>(batch.size());
}

PoolStats martingale_pool_stats(const Objective& obj, const PathPool& pool, const ValueNet& value,
                                const ControlNet& control, const AdversarialNet& adversarial,
                                RngStream rng, Index draw_sets) {
  MARTNET_REQUIRE(draw_sets >= 1, "martingale_pool_stats: need at least one draw set");
  constexpr Index kChunk = 8192;
  const Index total = pool.n_steps * pool.n_paths;
  PoolStats stats;
  stats.g_vec = Vector::Zero(adversarial.width());
  double mv_acc = 0.0;
  Index done = 0;
  Index chunk_id = 0;
  while (done < total) {
    const Index count = std::min(kChunk, total - done);
    Minibatch chunk;
    chunk.items.reserve(static_cast<size_t>(count));
    for (Index f = done; f < done + count; ++f) {
      chunk.items.emplace_back(f / pool.n_paths, f % pool.n_paths);
    }
    RngStream chunk_rng = rng.split(static_cast<std::uint64_t>(chunk_id));
    Vector g_chunk = Vector::Zero(adversarial.width());
    double mv_chunk = 0.0;
    for (Index set = 0; set < draw_sets; ++set) {
      const LossBreakdown part =
          evaluate(obj, pool, chunk, value, control, adversarial, 0.0,
                   chunk_rng.split(static_cast<std::uint64_t>(set)), nullptr);
      g_chunk += part.g_vec;
      mv_chunk = part.mean_value;  // draw-independent
    }
    stats.g_vec += double(count) * g_chunk / double(draw_sets);
    mv_acc += double(count) * mv_chunk;
    done += count;
    ++chunk_id;
  }
  stats.g_vec /= double(total);
  stats.mean_value = mv_acc / double(total);
  stats.mart_scalar = obj.g_mode == GMode::VectorNorm ? stats.g_vec.norm()
                                                      : std::abs(stats.g_vec.sum());
  return stats;
}

Vector martingale_vector_fns(const Objective& obj, const PathPool& pool, const Minibatch& batch,
                             const ScalarField& value_fn, const VectorField& control_fn,
                             const VectorField& rho_fn, RngStream rng) {
  const ProblemSpec& spec = *obj.spec;
  const double h = obj.rdo.h;
  MARTNET_REQUIRE(h == pool.h, "objective: rdo step differs from the pool grid step");
  Vector g_bar;
  for (Index k = 0; k < batch.size(); ++k) {
    const auto [n, m] = batch.items[static_cast<size_t>(k)];
    const double t = pool.times[static_cast<size_t>(n)];
    const double t_next = pool.times[static_cast<size_t>(n) + 1];
    const Vector x = pool.states[static_cast<size_t>(n)].col(m);
    RngStream st = rng.split(static_cast<std::uint64_t>(k));
    const Vector w = sample_noise(obj.rdo.law, st);
    const Vector kappa = control_fn(t, x);
    const Vector scaled = std::sqrt(h) * w;
    const Vector xi = eval_drift(spec, t, x, kappa) * h +
                      eval_diffusion_apply(spec, t, x, kappa, scaled);
    const Vector y = x + xi;
    const double residual =
        (value_fn(t_next, y) - value_fn(t, x)) / h + spec.cost(t, x, kappa);
    const Vector rho = rho_fn(t, x);
    if (g_bar.size() == 0) g_bar = Vector::Zero(rho.size());
    g_bar += rho * residual;
  }
  return g_bar / static_cast<double>(batch.size());
}

}  // namespace martnet
