#pragma once

#include <functional>

namespace sodkit {

// Maps the user-facing thread count (0 = all available cores) onto a
// positive worker count.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n) across `threads` workers. Callers must write
// results into per-index slots and reduce in index order afterwards, so the
// outcome never depends on scheduling. The first exception thrown by any
// worker is rethrown after all workers finish.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace sodkit
