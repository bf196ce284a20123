#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "martnet/objective.hpp"

namespace martnet {

// First four sample moments of a noise law against (0, 1, 0, kurt), each
// within tol_se standard errors. Exposed so a wrong expectation can be fed in
// as a negative control.
struct MomentReport {
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  bool pass = false;
  std::string detail;
};

MomentReport check_moments(const NoiseLaw& law, Index draws, double expected_kurtosis,
                           double tol_se, RngStream rng);

// Mutable views over a network's parameter blocks, in a fixed order matching
// the corresponding gradient struct. Used by finite-difference probes.
struct BlockRef {
  double* data = nullptr;
  Index size = 0;
};

std::vector<BlockRef> param_blocks(MlpNet& net);
std::vector<BlockRef> param_blocks(AdversarialNet& net);
std::vector<BlockRef> grad_blocks(const MlpGrad& g);
std::vector<BlockRef> grad_blocks(const AdvGrad& g);

// Central finite differences on `probes` randomly chosen parameter entries
// against the supplied analytic gradient; returns the worst relative error.
// loss() must be a deterministic function of the parameters (replayed noise).
double grad_check(const std::vector<BlockRef>& params, const std::vector<BlockRef>& grads,
                  const std::function<double()>& loss, Index probes, RngStream rng,
                  double fd_step = 1e-6);

// Worst |martingale - rdo| over random nets, points, and step sizes with
// shared draws; 0 up to rounding when the two routes implement the same
// quantity.
double residual_identity_gap(Index trials, RngStream rng);

// Fast invariant battery behind `verify`: noise moments, residual-route
// identity, gradient oracles, Euler audit. Prints one line per check to out;
// returns the number of failures.
int run_verify_battery(std::ostream& out, Index threads);

}  // namespace martnet
