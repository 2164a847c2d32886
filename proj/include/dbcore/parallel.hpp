#pragma once

#include <functional>

namespace dbcore {

// Thread cap from the DBCORE_THREADS environment variable.
// Unset or 0 means "use the hardware concurrency".
int thread_budget();

// Runs fn(i) for i in [0, n) split into contiguous chunks across threads.
// Chunk boundaries depend only on n and the budget, and each index is
// processed exactly once, so writers to disjoint slots stay deterministic.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace dbcore
