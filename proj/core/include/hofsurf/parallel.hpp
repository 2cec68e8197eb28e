#pragma once

#include <cstddef>
#include <functional>

namespace hofsurf {

// Worker count for internal loops: hardware concurrency, capped by the
// HOFSURF_THREADS environment variable when set.
std::size_t worker_count();

// Splits [0, n) into contiguous chunks and runs `body(begin, end)` on each,
// possibly concurrently. Chunks never overlap, so writes to per-index slots
// are race-free and results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

} // namespace hofsurf
