#pragma once

#include <cstddef>
#include <functional>

namespace timberdiff {

/// Worker thread cap: TIMBERDIFF_THREADS if set (> 0), otherwise the hardware
/// concurrency. A value of 0 in the environment also means "auto".
int worker_count();

/// Runs fn over contiguous chunks of [0, n). Chunk boundaries depend only on
/// n and the worker count; callers must write results to per-index slots so
/// output is identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace timberdiff
