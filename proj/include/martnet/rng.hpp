#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "martnet/types.hpp"

namespace martnet {

namespace detail {

// Stafford mix13 finalizer; full-avalanche bijection on 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

}  // namespace detail

// Counter-based stream: draw i is mix64(key + i*golden), so the sequence is a
// pure function of (seed, stream id, draw index). split() derives a child key
// without touching the counter, which lets per-path / per-sample streams be
// carved out deterministically for parallel evaluation.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(detail::mix64(detail::mix64(seed + detail::kGolden) ^
                           detail::mix64(stream ^ 0x5851f42d4c957f2dull))),
        counter_(0) {}

  RngStream split(std::uint64_t tag) const {
    RngStream child;
    child.key_ = detail::mix64(key_ ^ detail::mix64(tag + detail::kGolden));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

  // (0, 1]; never returns 0 so log() stays finite.
  double uniform() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // [0, 1)
  double uniform_co() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased up to n/2^64 (Lemire multiply-shift).
  std::uint64_t uniform_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // One standard normal; consumes exactly two raw draws (Box-Muller, cosine leg).
  double gaussian() {
    const double u1 = uniform();
    const double u2 = uniform_co();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

// n iid standard normals, pairwise Box-Muller (both legs used).
inline Vector sample_gaussian(RngStream& rng, Index n) {
  MARTNET_REQUIRE(n >= 1, "sample_gaussian: n must be >= 1");
  Vector out(n);
  for (Index i = 0; i < n; i += 2) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform_co();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    out[i] = rad * std::cos(ang);
    if (i + 1 < n) out[i + 1] = rad * std::sin(ang);
  }
  return out;
}

// k distinct indices from {0..pool-1}, uniform without replacement
// (partial Fisher-Yates; order is part of the deterministic contract).
inline std::vector<Index> sample_indices(RngStream& rng, Index pool, Index k) {
  MARTNET_REQUIRE(k >= 0 && pool >= 0, "sample_indices: negative arguments");
  MARTNET_REQUIRE(k <= pool, "sample_indices: k exceeds pool size");
  std::vector<Index> ids(static_cast<size_t>(pool));
  for (Index i = 0; i < pool; ++i) ids[static_cast<size_t>(i)] = i;
  for (Index i = 0; i < k; ++i) {
    const Index j = i + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(pool - i)));
    std::swap(ids[static_cast<size_t>(i)], ids[static_cast<size_t>(j)]);
  }
  ids.resize(static_cast<size_t>(k));
  return ids;
}

}  // namespace martnet
