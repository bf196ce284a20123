#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "martnet/rng.hpp"
#include "martnet/types.hpp"

using namespace martnet;

namespace {

// Independent reference for the dense product.
Matrix naive_gemm(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j)
      for (Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

}  // namespace

TEST_CASE("gemm identity and hand arithmetic") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(gemm(Matrix::Identity(2, 2), a) == a);

  Matrix b(2, 1);
  b << 0, 1;
  const Matrix c = gemm(a, b);
  CHECK(c(0, 0) == 2.0);
  CHECK(c(1, 0) == 4.0);
}

TEST_CASE("gemm matches the naive triple loop on random instances") {
  RngStream rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix a(8, 8), b(8, 8);
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 8; ++j) {
        a(i, j) = rng.gaussian();
        b(i, j) = rng.gaussian();
      }
    const Matrix fast = gemm(a, b);
    const Matrix ref = naive_gemm(a, b);
    const double rel = (fast - ref).norm() / ref.norm();
    CHECK(rel <= 1e-12);
  }
}

TEST_CASE("gemm rejects mismatched shapes") {
  CHECK_THROWS_AS(gemm(Matrix::Zero(2, 3), Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("rng streams are reproducible and stream-id sensitive") {
  RngStream a(123, 7), b(123, 7), c(123, 8);
  bool all_equal = true, any_equal_c = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_equal_c = any_equal_c || (va == c.next_u64());
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_c);
}

TEST_CASE("split streams are decorrelated") {
  RngStream root(9);
  RngStream s1 = root.split(1), s2 = root.split(2);
  const Index n = 100000;
  double sum = 0;
  for (Index i = 0; i < n; ++i) sum += (s1.uniform_co() - 0.5) * (s2.uniform_co() - 0.5);
  // corr of U(0,1) pairs: SE = 1/(12 sqrt(n)); 5 SE bound
  CHECK(std::abs(sum / static_cast<double>(n)) < 5.0 / (12.0 * std::sqrt(double(n))));
}

TEST_CASE("gaussian sampler moments over 1e6 draws") {
  RngStream rng(2024);
  const Index n = 1000000;
  const Vector z = sample_gaussian(rng, n);
  const double m1 = z.mean();
  const double m2 = z.array().square().mean();
  const double m3 = z.array().cube().mean();
  const double m4 = z.array().square().square().mean();
  CHECK(std::abs(m1) < 0.004);
  CHECK(std::abs(m2 - 1.0) < 0.005);
  CHECK(std::abs(m3) < 5.0 * std::sqrt(15.0) / 1000.0);  // sd(W^3) = sqrt(15)
  CHECK(std::abs(m4 - 3.0) < 5.0 * std::sqrt(96.0) / 1000.0);  // sd(W^4) = sqrt(105 - 9)
}

TEST_CASE("gaussian sampler is deterministic per (seed, stream)") {
  RngStream a(5, 11), b(5, 11);
  const Vector za = sample_gaussian(a, 17);
  const Vector zb = sample_gaussian(b, 17);
  CHECK(za == zb);
}

TEST_CASE("sample_indices exhaustion gives a permutation") {
  RngStream rng(3);
  auto ids = sample_indices(rng, 5, 5);
  std::sort(ids.begin(), ids.end());
  for (Index i = 0; i < 5; ++i) CHECK(ids[static_cast<size_t>(i)] == i);
}

TEST_CASE("sample_indices is uniform for k=1") {
  RngStream rng(77);
  const int trials = 100000;
  std::vector<int> counts(10, 0);
  for (int i = 0; i < trials; ++i) {
    ++counts[static_cast<size_t>(sample_indices(rng, 10, 1)[0])];
  }
  for (const int c : counts) {
    CHECK(std::abs(c / double(trials) - 0.1) < 0.01);
  }
}

TEST_CASE("sample_indices determinism and bounds") {
  RngStream a(1, 2), b(1, 2);
  CHECK(sample_indices(a, 100, 10) == sample_indices(b, 100, 10));
  RngStream c(1);
  CHECK_THROWS_AS(sample_indices(c, 3, 4), std::invalid_argument);
}
