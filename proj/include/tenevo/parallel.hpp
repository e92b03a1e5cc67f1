#pragma once

#include <cstddef>
#include <functional>

namespace tenevo {

/// Worker count for per-dimension loops. Reads TENEVO_THREADS once; the
/// deterministic flag of a run forces 1 through set_thread_count().
int thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [0, n). Every index owns its outputs, so results do not
/// depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace tenevo
