#pragma once

#include <cstddef>
#include <functional>

namespace cvem {

/// Worker count: `requested` when non-zero, else the CONSENSUS_VEM_THREADS
/// environment variable, else hardware concurrency. The environment variable
/// also caps an explicit request.
std::size_t worker_count(std::size_t requested = 0);

/// Runs body(i) for i in [0, n) on up to `workers` threads, in contiguous
/// chunks. Bodies must touch disjoint state. Rethrows the first exception.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace cvem
