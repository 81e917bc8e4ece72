#pragma once

#include <cstddef>
#include <functional>

namespace pme {

// Worker count from PME_THREADS, falling back to hardware concurrency.
unsigned thread_count();

// Calls body(i) for i in [0, n) across worker threads. Each index is visited
// exactly once; callers write results into per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pme
