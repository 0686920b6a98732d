#pragma once

#include <cstddef>
#include <functional>

namespace hoferlab::core {

// Worker count used by the parallel sweeps (default: hardware concurrency).
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n) on up to thread_count() std::threads.
// Exceptions are rethrown on the caller (first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hoferlab::core
