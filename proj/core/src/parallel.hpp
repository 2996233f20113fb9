#pragma once

// Internal static-partition helper. Work items must be independent and write
// to disjoint, preallocated slots so results never depend on the job count.

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace apbtriage::detail {

template <typename Fn>
void run_partitioned(std::size_t count, unsigned jobs, Fn&& fn) {
  if (count == 0) return;
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  if (jobs > count) jobs = static_cast<unsigned>(count);
  if (jobs <= 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  std::size_t chunk = (count + jobs - 1) / jobs;
  for (unsigned w = 0; w < jobs; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : workers) t.join();
}

}  // namespace apbtriage::detail
