#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace nvdesign {

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1U : hw;
}

/// Runs produce(i) for i in [0, n) on `workers` threads and hands each result
/// to consume(i, result) strictly in index order on whichever thread completes
/// the gap. Results held back waiting for their turn are bounded by
/// 2 * workers, after which producers block. Output therefore does not depend
/// on the worker count.
template <class Produce, class Consume>
void ordered_parallel(std::size_t n, unsigned workers, Produce produce, Consume consume) {
  using Result = decltype(produce(std::size_t{0}));
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) consume(i, produce(i));
    return;
  }

  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, Result> pending;
  std::size_t next_consume = 0;
  std::atomic<std::size_t> next_produce{0};
  std::exception_ptr error;
  const std::size_t window = 2 * static_cast<std::size_t>(workers);

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next_produce.fetch_add(1);
      if (i >= n) return;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return error || i < next_consume + window; });
        if (error) return;
      }
      try {
        Result r = produce(i);
        std::unique_lock lock(mu);
        pending.emplace(i, std::move(r));
        while (!error && !pending.empty() && pending.begin()->first == next_consume) {
          auto node = pending.extract(pending.begin());
          consume(node.key(), std::move(node.mapped()));
          ++next_consume;
        }
        cv.notify_all();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        cv.notify_all();
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace nvdesign
