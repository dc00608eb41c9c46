#pragma once

#include <cstddef>
#include <functional>

namespace magspec {

// Process-wide worker count used by the data-parallel loops. Results never
// depend on it: every loop writes into index-owned slots and reductions run
// sequentially in index order afterwards.
void set_worker_count(unsigned workers);
unsigned worker_count();

// Calls body(i) for i in [0, count), split into contiguous chunks across the
// configured workers. Exceptions thrown by a body are rethrown (the one with
// the smallest chunk index wins) after all workers have joined.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace magspec
