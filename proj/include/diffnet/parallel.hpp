#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace diffnet {

inline int resolve_workers(int requested) {
  if (requested > 0) return std::min(requested, 256);
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min<unsigned>(hw, 64));
}

// Runs fn(worker, begin, end) over a static partition of [0, count) into
// contiguous chunks, one per worker. The partition depends only on (count,
// workers), so results that are reduced in worker order are reproducible.
template <class Fn>
void parallel_chunks(std::size_t count, int workers, Fn&& fn) {
  int w = resolve_workers(workers);
  if (count == 0) return;
  w = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(w), count));
  if (w <= 1) {
    fn(0, std::size_t{0}, count);
    return;
  }
  const std::size_t base = count / static_cast<std::size_t>(w);
  const std::size_t rem = count % static_cast<std::size_t>(w);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(w));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::size_t begin = 0;
  for (int i = 0; i < w; ++i) {
    const std::size_t len = base + (static_cast<std::size_t>(i) < rem ? 1 : 0);
    const std::size_t end = begin + len;
    threads.emplace_back([&, i, begin, end] {
      try {
        fn(i, begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace diffnet
