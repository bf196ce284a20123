#pragma once

#include <string>
#include <vector>

#include "martnet/nets.hpp"
#include "martnet/paths.hpp"
#include "martnet/problem.hpp"
#include "martnet/rng.hpp"

namespace martnet {

struct OracleConfig {
  Index mc_samples = 1'000'000;
  enum class Mode { MonteCarlo, Quadrature1d } mode = Mode::MonteCarlo;
  std::uint64_t seed = 9001;
  Index threads = 1;
};

struct RefValue {
  double value = 0.0;
  double se = 0.0;
};

// Gauss-Hermite nodes/weights via the Golub-Welsch tridiagonal eigenproblem.
// expectation() integrates f against the standard normal density; exact for
// polynomials up to degree 2n-1.
struct GaussHermite {
  Vector nodes;    // roots of H_n (physicists' weight exp(-x^2))
  Vector weights;

  static GaussHermite make(Index n);
  double expectation(const std::function<double(double)>& f) const;
};

// Reference solution of the benchmark equation:
//   Smooth/Oscillatory: v(t,x) = 1 - ln E[exp(-g(x + sqrt(2) B_{T-t}))]
//   HeatSanity:         v(t,x) = E[terminal(x + sqrt(2) B_{T-t})]
// Monte-Carlo estimation with a log-sum-exp shift; at t == T the degenerate
// expectation is returned exactly. Quadrature1d (d == 1 only) integrates the
// same expectation with Gauss-Hermite nodes and zero standard error.
RefValue reference_value(BenchmarkVariant variant, Index d, double T, double t, const Vector& x,
                         const OracleConfig& cfg);

// All grid columns at once with common random numbers across points (one
// Brownian sample set, reused per point; each point's estimate keeps its own
// standard error).
std::vector<RefValue> reference_grid(BenchmarkVariant variant, Index d, double T, double t,
                                     const Matrix& points, const OracleConfig& cfg);

// sum |candidate - reference| / sum |reference|
double relative_error(const std::vector<double>& candidate, const std::vector<double>& reference);

// Monte-Carlo estimate of the control cost
//   J(u) = E[ sum_n c(t_n, X_n, u_n) h + terminal(X_N) ]
// via Euler rollouts from x0 under the given feedback control, running cost
// accumulated at the left endpoint.
RefValue socp_cost(const ProblemSpec& spec, const ControlNet& control, const Vector& x0,
                   Index n_rollouts, Index n_steps, RngStream rng, Index threads = 1);

// Disk cache for grid reference values, keyed by the full estimation recipe;
// mismatching headers force a recompute. Writes are temp-file + rename.
struct OracleCacheKey {
  std::string variant;
  Index d = 0;
  double T = 0.0;
  double t = 0.0;
  Index mc_samples = 0;
  std::uint64_t seed = 0;
  Index points_per_segment = 0;
};

bool load_oracle_cache(const std::string& path, const OracleCacheKey& key,
                       std::vector<RefValue>& out);
void save_oracle_cache(const std::string& path, const OracleCacheKey& key,
                       const std::vector<RefValue>& values);

std::vector<RefValue> cached_reference_grid(const std::string& cache_path,
                                            BenchmarkVariant variant, Index d, double T, double t,
                                            const EvalGrid& grid, const OracleConfig& cfg);

}  // namespace martnet
