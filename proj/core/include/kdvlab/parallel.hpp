#pragma once

#include <cstddef>
#include <functional>

namespace kdvlab {

/// Worker count used when a caller passes threads == 0. Defaults to the
/// KDV_TRANSPORT_THREADS environment variable, or 1 when unset or invalid.
std::size_t default_threads();
void set_default_threads(std::size_t threads);

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = default_threads()).
/// Callers write results into index-addressed slots, so output never depends on
/// scheduling. If several iterations throw, the exception of the lowest index is
/// rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace kdvlab
