#pragma once

#include <cstddef>
#include <functional>

namespace mvsfuse {

// Process-wide default worker count, set once by the CLI (--jobs). 0 means
// hardware concurrency.
void set_default_jobs(int jobs);
int default_jobs();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker; fn writes only to disjoint outputs, so the result is identical for
// any worker count. jobs <= 0 uses default_jobs().
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int jobs = 0);

}  // namespace mvsfuse
