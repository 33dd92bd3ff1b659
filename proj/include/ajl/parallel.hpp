#pragma once

#include <cstddef>
#include <functional>

namespace ajl {

/// requested > 0 wins; otherwise AJL_THREADS, otherwise 1.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, n) on up to `threads` workers with static
/// contiguous chunks. Each index must write only its own output slot, which
/// keeps results independent of the thread count. The first exception thrown
/// by any worker is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ajl
