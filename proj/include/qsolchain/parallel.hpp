#pragma once

#include <cstddef>
#include <functional>

// Deterministic work sharing.  Work is split into a thread-count-independent
// number of blocks; workers pull block indices from a shared counter and may
// only write to per-block output slots.  Combining block results in block
// order afterwards makes every reduction independent of scheduling.

namespace qsol::par {

// requested == 0 resolves to the hardware concurrency (at least 1).
unsigned resolve_threads(unsigned requested);

// Runs fn(block) for block = 0..n_blocks-1 on up to `threads` threads.
// Exceptions from workers are rethrown (first one wins).
void for_blocks(std::size_t n_blocks, unsigned threads,
                const std::function<void(std::size_t)>& fn);

}  // namespace qsol::par
