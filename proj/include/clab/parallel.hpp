#ifndef CLAB_PARALLEL_HPP
#define CLAB_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace clab {

// Requested worker count resolved against the hardware: 0 means "all cores".
int resolve_workers(int requested);

// Runs body(begin, end) on disjoint contiguous ranges covering [0, n), one
// range per worker thread (inline when a single worker suffices). The first
// exception thrown by any worker is rethrown here after all workers join.
// Callers must write results into per-index slots and reduce afterwards in
// index order; that keeps every result independent of the worker count.
void parallel_chunks(std::int64_t n, int n_workers,
                     const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace clab

#endif
