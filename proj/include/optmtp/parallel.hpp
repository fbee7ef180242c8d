#pragma once

#include <cstddef>
#include <functional>

// Shared-nothing index-range parallelism. Thread count comes from
// OPTMTP_THREADS, defaulting to the hardware concurrency. Workers own
// disjoint index ranges so results are bitwise deterministic.

namespace optmtp {

int worker_count();

// Runs fn(i) for i in [0, count); blocks until done.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace optmtp
