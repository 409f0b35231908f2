#pragma once

#include <cstddef>
#include <functional>

namespace hjlab {

/// Worker count used when a call does not pass one (initially 1).
int default_threads();
void set_default_threads(int threads);

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Work is handed out by index; callers write results into slot i, so the
/// outcome never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace hjlab
