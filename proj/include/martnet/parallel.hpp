#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "martnet/types.hpp"

namespace martnet {

// Static shard partition with a shard count independent of the worker count,
// so per-shard results combined in shard order are identical for any
// --threads value. Workers pull shard ids from an atomic cursor.
inline void parallel_shards(Index n_items, Index n_shards, Index n_threads,
                            const std::function<void(Index shard, Index begin, Index end)>& fn) {
  if (n_items <= 0) return;
  if (n_shards > n_items) n_shards = n_items;
  if (n_shards < 1) n_shards = 1;
  const Index chunk = (n_items + n_shards - 1) / n_shards;

  auto run_shard = [&](Index s) {
    const Index begin = s * chunk;
    const Index end = std::min(n_items, begin + chunk);
    if (begin < end) fn(s, begin, end);
  };

  if (n_threads <= 1 || n_shards == 1) {
    for (Index s = 0; s < n_shards; ++s) run_shard(s);
    return;
  }

  std::atomic<Index> cursor{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto worker = [&] {
    for (;;) {
      const Index s = cursor.fetch_add(1);
      if (s >= n_shards) return;
      try {
        run_shard(s);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  const Index workers = std::min<Index>(n_threads, n_shards);
  threads.reserve(static_cast<size_t>(workers));
  for (Index t = 0; t < workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace martnet
