#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace dynagg {

/// Run fn(begin, end) over a partition of [0, n) on `jobs` threads.
/// Each range is disjoint, so writes to per-index slots stay race-free
/// and the result is identical at any job count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  if (n == 0) return;
  if (jobs <= 1 || n == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  unsigned workers = jobs;
  if (workers > n) workers = static_cast<unsigned>(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * chunk;
    if (begin >= n) break;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dynagg
