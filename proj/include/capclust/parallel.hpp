#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace capclust {

// Runs fn(0..count-1) on up to `threads` workers. Work items must derive
// any randomness from their own index so the schedule cannot change
// results. The first exception is rethrown after all workers finish.
inline void parallel_for(long count, int threads,
                         const std::function<void(long)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int nw = static_cast<int>(std::min<long>(threads, count));
  for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace capclust
