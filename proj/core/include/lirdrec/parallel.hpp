#pragma once

#include <cstddef>
#include <functional>

namespace lirdrec {

// Caps the worker pool used by parallel_for. 0 restores hardware concurrency.
void set_max_threads(int n);
int max_threads();

// Runs body(begin, end) over a static partition of [0, n). Output ranges are
// disjoint per task, so results do not depend on the thread count.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body);

}  // namespace lirdrec
