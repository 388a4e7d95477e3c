#pragma once

// Deterministic parallel-for over an index range. Each index must write only
// its own outputs; reductions over the results happen afterwards in index
// order, so the observable result never depends on the thread count.
// ADVSTICKER_THREADS caps the pool (0 = serial); unset uses the hardware.

#include <cstddef>
#include <functional>

namespace advsticker {

// Effective thread cap from the environment, resolved once.
int max_threads();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace advsticker
