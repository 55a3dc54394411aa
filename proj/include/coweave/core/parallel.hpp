// Deterministic task-parallel helper. Tasks are indexed; each task writes
// only to its own slot, and any cross-task reduction must happen afterwards
// in index order. With counter-based RNG this makes results independent of
// the thread count.
#pragma once

#include <cstddef>
#include <functional>

namespace coweave {

// Runs fn(i) for i in [0, n) on up to `threads` workers (static interleaved
// assignment). threads <= 1 runs inline. Exceptions are captured and the
// first one (by task index) is rethrown after all workers join.
void parallel_for_index(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Default worker count from the environment (>= 1).
int default_thread_count();

}  // namespace coweave
