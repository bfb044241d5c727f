#pragma once

#include <cstddef>
#include <functional>

namespace relight {

// Upper bound on worker threads used by parallel kernels. Initialized from
// RELIGHT_THREADS when set, otherwise hardware concurrency.
int default_thread_count();
void set_default_thread_count(int threads);

// Calls fn(i) for every i in [0, n). Work is split into contiguous chunks, one
// per thread; fn must not depend on evaluation order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

}  // namespace relight
