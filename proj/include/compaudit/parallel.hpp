#pragma once

#include <cstddef>
#include <functional>

namespace compaudit {

// Worker-thread count: `requested` if positive, else the COMPAUDIT_THREADS
// environment variable, else hardware concurrency.
int resolve_threads(int requested = 0);

// Runs fn(i) for i in [begin, end). Work items are claimed from a shared
// atomic counter, so any schedule computes every item exactly once; callers
// must keep per-item outputs indexed so results do not depend on the
// schedule. Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::size_t begin, std::size_t end, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace compaudit
