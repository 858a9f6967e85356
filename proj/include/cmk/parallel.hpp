#pragma once

#include <cstddef>
#include <functional>

namespace cmk {

/// Worker count: CMK_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, count). Iterations must be independent; results
/// are identical for any worker count. Small ranges run inline.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace cmk
