#include "dbcore/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace dbcore {

int thread_budget() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  const char* env = std::getenv("DBCORE_THREADS");
  if (env == nullptr) return hw;
  const long v = std::strtol(env, nullptr, 10);
  if (v <= 0) return hw;
  return static_cast<int>(v) < hw ? static_cast<int>(v) : hw;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int workers = thread_budget();
  if (workers > n) workers = n;
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const int begin = t * chunk;
    const int end = begin + chunk < n ? begin + chunk : n;
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace dbcore
