#pragma once

#include <cstddef>
#include <functional>

namespace nsgf {

// Worker count: NSGF_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

// Runs body(begin, end) over [0, n) split into fixed chunks of `chunk`
// items. Chunk boundaries never depend on the thread count, so any
// per-chunk result is reproducible.
void parallel_for_chunks(std::size_t n, std::size_t chunk,
                         const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace nsgf
