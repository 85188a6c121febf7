#pragma once

#include <cstddef>
#include <functional>

namespace mareforge {

/// Worker count: MARE_FORGE_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(0) .. fn(n - 1) on up to worker_count() threads. If any call
/// throws, the exception from the lowest index is rethrown after all workers
/// finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mareforge
