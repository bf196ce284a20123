#pragma once

#include <utility>
#include <vector>

#include "martnet/nets.hpp"
#include "martnet/problem.hpp"
#include "martnet/rng.hpp"

namespace martnet {

// Evaluation grid on the two line segments {s e1} and {s e2}, s in [-1, 1],
// with e1 = (1,0,...,0) and e2 = (1,1,...,1). Points include both endpoints
// and duplicates (the shared origin) are kept.
struct EvalGrid {
  Matrix points;               // d x (2 * per_segment), columns are grid points
  std::vector<double> params;  // s per column
  std::vector<int> segment;    // 0 = first-axis, 1 = diagonal
  Index per_segment = 0;

  Index size() const { return points.cols(); }
};

EvalGrid build_eval_grid(Index d, Index per_segment);

// Exploration states on the uniform grid t_n = n h (the last entry pinned to
// T exactly) plus the Brownian increments that produced them. Start columns
// cycle the evaluation grid.
struct PathPool {
  std::vector<Matrix> states;      // N+1 entries of d x M
  std::vector<Matrix> increments;  // N entries of q x M
  std::vector<double> times;       // N+1 entries
  double h = 0.0;
  Index n_steps = 0;   // N
  Index n_paths = 0;   // M
  int generation_epoch = 0;
};

PathPool generate_paths(const ProblemSpec& spec, const ControlNet& control, const EvalGrid& grid,
                        Index n_steps, Index n_paths, RngStream rng, int epoch = 0);

// Replays the stored increments through the Euler recursion and returns the
// max absolute deviation from the stored states.
double euler_replay_error(const ProblemSpec& spec, const ControlNet& control,
                          const PathPool& pool);

// Index subset of {0..N-1} x {0..M-1}, uniform without replacement.
struct Minibatch {
  std::vector<std::pair<Index, Index>> items;  // (n, m)
  Index size() const { return static_cast<Index>(items.size()); }
};

Minibatch draw_minibatch(const PathPool& pool, Index size, RngStream& rng);

}  // namespace martnet
