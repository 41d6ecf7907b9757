#pragma once

#include <cstddef>
#include <functional>

namespace kashf {

/// Worker count used when a caller passes 0: KASHF_WORKERS if set and
/// positive, otherwise the hardware concurrency (at least 1).
std::size_t default_workers();

/// Runs body(i) for every i in [0, count) on up to `workers` threads.
/// Work items must write to disjoint outputs; results therefore never depend
/// on scheduling. The first exception thrown by any item is rethrown.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace kashf
