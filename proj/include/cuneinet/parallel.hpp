#pragma once

#include <cstddef>
#include <functional>

namespace cuneinet {

/// Caps the worker count used by parallel_for. 0 means hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Splits [0, n) into contiguous chunks, one per worker, and runs
/// body(begin, end) on each. Bodies must write disjoint outputs; no reduction
/// crosses a chunk boundary, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 256);

}  // namespace cuneinet
