#pragma once

#include <cstddef>
#include <functional>

namespace gazebench {

// min(hardware concurrency, GAZEBENCH_THREADS when set); at least 1
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Callers write results into per-index slots;
// scheduling order is unspecified.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gazebench
