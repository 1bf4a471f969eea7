#pragma once

#include <cstdint>
#include <functional>

namespace allflow {

/// Worker count from ALLFLOW_THREADS, else the hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for every i in [0, n) on up to `workers` threads. Indices are
/// handed out from a shared atomic counter; the first exception thrown by any
/// body is rethrown after all workers stop.
void parallel_for(std::uint64_t n, unsigned workers, const std::function<void(std::uint64_t)>& body);

}  // namespace allflow
