#pragma once

#include <functional>

namespace jring {

// Runs fn(i) for i in [0, n). Callers write results into preallocated slots
// so output order never depends on scheduling.
void parallel_for(int n, const std::function<void(int)>& fn, int threads = 1);

int hardware_threads();

}  // namespace jring
