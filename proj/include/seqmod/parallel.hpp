#pragma once

#include <cstddef>
#include <functional>

namespace seqmod {

/// Worker count from SEQMOD_WORKERS, else hardware concurrency (>= 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index
/// is visited exactly once; callers write results to disjoint slots so the
/// output does not depend on the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace seqmod
