#pragma once

#include <cstddef>
#include <functional>

namespace spikezip {

// Runs fn(i) for every i in [0, count) on up to `threads` workers
// (<= 1 means sequential). fn must only write to per-index slots; completion
// order is unspecified, so determinism comes from indexing, not scheduling.
// The first exception thrown by any worker is rethrown after all join.
void parallel_for_index(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t)>& fn);

// SPIKEZIP_THREADS, treating unset, empty, 0 or garbage as sequential.
unsigned env_thread_budget();

}  // namespace spikezip
