#pragma once

#include <cstddef>
#include <functional>

namespace abcnn {

// Default worker count: ABCNN_THREADS if set, else hardware concurrency.
int default_thread_count();

// Runs fn(i) for i in [0, n) across up to n_threads workers (0 = default).
// Work is handed out in contiguous chunks; callers that need reproducibility
// key their RNG on i, so the schedule never affects results.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int n_threads = 0);

}  // namespace abcnn
