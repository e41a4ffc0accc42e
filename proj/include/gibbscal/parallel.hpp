#pragma once

#include <cstddef>
#include <functional>

namespace gibbscal {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Each index runs exactly once; callers write results into
/// per-index slots so the outcome never depends on scheduling. The first
/// exception thrown by fn is rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace gibbscal
