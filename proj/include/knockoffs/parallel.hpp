#pragma once

#include <functional>

namespace knockoffs {

// Runs body(0..count-1) across `threads` workers pulling indices from a
// shared counter. Each index must write only its own output slot; with that
// discipline results are identical for any thread count. The first exception
// thrown by a body is rethrown on the calling thread, tagged with its index.
void parallel_for_index(long count, int threads,
                        const std::function<void(long)>& body);

// Thread count resolution: explicit argument if > 0, else KNOCKOFF_THREADS
// env var, else hardware concurrency.
int resolve_threads(int requested);

}  // namespace knockoffs
