#pragma once

#include <cstddef>
#include <functional>

namespace bonnet {

/// Worker count: hardware concurrency, capped by the BONNET_THREADS
/// environment variable when it holds a positive integer.
int default_thread_count();

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = default).
/// Each index runs exactly once; the first exception thrown is rethrown
/// after all workers have joined.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, int threads = 0);

}  // namespace bonnet
