#pragma once

#include <cstdint>
#include <functional>

namespace rgexpect {

/// Worker count used by parallel loops. Reads RGEXPECT_THREADS once
/// (0 or unset = hardware concurrency).
int thread_count();

/// Runs fn(i) for i in [0, n). Tasks are distributed over a fixed number of
/// workers; fn must write only to caller-owned slots indexed by i, so results
/// do not depend on the worker count.
void parallel_for(std::uint64_t n, const std::function<void(std::uint64_t)>& fn);

} // namespace rgexpect
