#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace martnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Configuration/contract violations are thrown, never silently clipped.
[[noreturn]] inline void fail(const std::string& msg) { throw std::invalid_argument(msg); }

#define MARTNET_REQUIRE(cond, msg)        \
  do {                                    \
    if (!(cond)) ::martnet::fail((msg));  \
  } while (0)

inline void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) fail(std::string(what) + ": non-finite entries");
}

// Dense product with an explicit shape contract. The naive reference lives in
// the test suite and pins this down on random instances.
inline Matrix gemm(const Matrix& a, const Matrix& b) {
  MARTNET_REQUIRE(a.cols() == b.rows(), "gemm: inner dimensions differ");
  Matrix c = a * b;
  require_finite(c, "gemm result");
  return c;
}

}  // namespace martnet
