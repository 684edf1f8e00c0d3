#pragma once

#include <cstddef>
#include <functional>

namespace acdkit {

/// Worker count for internal parallel loops. Reads ACDKIT_THREADS on every
/// call (values < 1 or unparsable fall back to hardware concurrency).
std::size_t worker_count();

/// Runs task(i) for i in [0, n) on up to worker_count() threads. Tasks must
/// write only to their own outputs; results are then independent of the
/// worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace acdkit
