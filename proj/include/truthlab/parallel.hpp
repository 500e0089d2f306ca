#pragma once

#include <cstddef>
#include <functional>

namespace truthlab {

/// Runs body(i) for every i in [0, count) on up to `jobs` threads. Callers
/// write into per-index slots, so the result never depends on scheduling.
/// After every index has run, the exception of the lowest failing index is
/// rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

/// Worker count from TRUTHLAB_JOBS, or 1.
int default_jobs();

}  // namespace truthlab
