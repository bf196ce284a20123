#include "martnet/paths.hpp"

#include <cmath>

namespace martnet {

EvalGrid build_eval_grid(Index d, Index per_segment) {
  MARTNET_REQUIRE(d >= 1, "build_eval_grid: d must be >= 1");
  MARTNET_REQUIRE(per_segment >= 2, "build_eval_grid: need at least 2 points per segment");
  EvalGrid grid;
  grid.per_segment = per_segment;
  grid.points.resize(d, 2 * per_segment);
  grid.params.resize(static_cast<size_t>(2 * per_segment));
  grid.segment.resize(static_cast<size_t>(2 * per_segment));
  const double spacing = 2.0 / static_cast<double>(per_segment - 1);
  for (Index seg = 0; seg < 2; ++seg) {
    for (Index j = 0; j < per_segment; ++j) {
      const Index col = seg * per_segment + j;
      const double s = -1.0 + spacing * static_cast<double>(j);
      grid.params[static_cast<size_t>(col)] = s;
      grid.segment[static_cast<size_t>(col)] = static_cast<int>(seg);
      if (seg == 0) {
        grid.points.col(col).setZero();
        grid.points(0, col) = s;
      } else {
        grid.points.col(col).setConstant(s);
      }
    }
  }
  return grid;
}

namespace {

std::vector<double> make_times(Index n_steps, double T) {
  const double h = T / static_cast<double>(n_steps);
  std::vector<double> times(static_cast<size_t>(n_steps) + 1);
  for (Index n = 0; n < n_steps; ++n) times[static_cast<size_t>(n)] = h * static_cast<double>(n);
  times[static_cast<size_t>(n_steps)] = T;  // pinned so the terminal switch fires exactly
  return times;
}

}  // namespace

PathPool generate_paths(const ProblemSpec& spec, const ControlNet& control, const EvalGrid& grid,
                        Index n_steps, Index n_paths, RngStream rng, int epoch) {
  MARTNET_REQUIRE(n_steps >= 1 && n_paths >= 1, "generate_paths: N and M must be >= 1");
  MARTNET_REQUIRE(grid.size() >= 1, "generate_paths: empty grid");

  PathPool pool;
  pool.h = spec.T / static_cast<double>(n_steps);
  pool.n_steps = n_steps;
  pool.n_paths = n_paths;
  pool.generation_epoch = epoch;
  pool.times = make_times(n_steps, spec.T);

  // Per-path increment streams, independent of traversal order.
  pool.increments.assign(static_cast<size_t>(n_steps), Matrix(spec.q, n_paths));
  const double sqrt_h = std::sqrt(pool.h);
  for (Index m = 0; m < n_paths; ++m) {
    RngStream st = rng.split(static_cast<std::uint64_t>(m));
    for (Index n = 0; n < n_steps; ++n) {
      pool.increments[static_cast<size_t>(n)].col(m) = sqrt_h * sample_gaussian(st, spec.q);
    }
  }

  pool.states.assign(static_cast<size_t>(n_steps) + 1, Matrix(spec.d, n_paths));
  Matrix& start = pool.states[0];
  for (Index m = 0; m < n_paths; ++m) start.col(m) = grid.points.col(m % grid.size());

  for (Index n = 0; n < n_steps; ++n) {
    const double t = pool.times[static_cast<size_t>(n)];
    const Matrix& x = pool.states[static_cast<size_t>(n)];
    const Matrix u = control.control_batch(
        stack_time_state(Eigen::RowVectorXd::Constant(n_paths, t), x));
    Matrix& next = pool.states[static_cast<size_t>(n) + 1];
    for (Index m = 0; m < n_paths; ++m) {
      const Vector xm = x.col(m);
      const Vector um = u.col(m);
      next.col(m) = xm + eval_drift(spec, t, xm, um) * pool.h +
                    eval_diffusion_apply(spec, t, xm, um,
                                         pool.increments[static_cast<size_t>(n)].col(m));
    }
  }
  return pool;
}

double euler_replay_error(const ProblemSpec& spec, const ControlNet& control,
                          const PathPool& pool) {
  double worst = 0.0;
  for (Index n = 0; n < pool.n_steps; ++n) {
    const double t = pool.times[static_cast<size_t>(n)];
    const Matrix& x = pool.states[static_cast<size_t>(n)];
    const Matrix u = control.control_batch(
        stack_time_state(Eigen::RowVectorXd::Constant(pool.n_paths, t), x));
    for (Index m = 0; m < pool.n_paths; ++m) {
      const Vector xm = x.col(m);
      const Vector um = u.col(m);
      const Vector replay =
          xm + eval_drift(spec, t, xm, um) * pool.h +
          eval_diffusion_apply(spec, t, xm, um,
                               pool.increments[static_cast<size_t>(n)].col(m));
      worst = std::max(worst,
                       (replay - pool.states[static_cast<size_t>(n) + 1].col(m))
                           .cwiseAbs()
                           .maxCoeff());
    }
  }
  return worst;
}

Minibatch draw_minibatch(const PathPool& pool, Index size, RngStream& rng) {
  const Index total = pool.n_steps * pool.n_paths;
  MARTNET_REQUIRE(size >= 1, "draw_minibatch: size must be >= 1");
  MARTNET_REQUIRE(size <= total, "draw_minibatch: size exceeds N*M");
  const std::vector<Index> flat = sample_indices(rng, total, size);
  Minibatch batch;
  batch.items.reserve(static_cast<size_t>(size));
  for (const Index f : flat) batch.items.emplace_back(f / pool.n_paths, f % pool.n_paths);
  return batch;
}

}  // namespace martnet
