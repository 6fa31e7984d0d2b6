#pragma once

#include <cstddef>
#include <functional>

namespace bolt {

/// Worker count used by parallel_for. 1 (the default) is sequential mode.
void set_thread_count(int n);
int thread_count();

/// Calls fn(i) for i in [begin, end) using static contiguous chunks. Each index
/// is visited exactly once; callers write only to per-index slots so the
/// result does not depend on the worker count. The first exception (lowest
/// chunk) is rethrown after all workers finish.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

} // namespace bolt
