#pragma once

#include <cstddef>
#include <functional>

namespace gforge {

// Worker count used by internal kernels. Read once from the
// GUIDANCE_FORGE_THREADS environment variable (default 1); results are
// bitwise reproducible for a fixed value.
int thread_count();
void set_thread_count(int n);

// Splits [0, n) into thread_count() contiguous chunks and calls
// fn(chunk_index, begin, end) for each. Chunk boundaries depend only on n and
// the thread count, so per-chunk partial sums reduced in chunk order are
// deterministic.
void parallel_chunks(std::size_t n,
                     const std::function<void(int, std::size_t, std::size_t)>& fn);

}  // namespace gforge
