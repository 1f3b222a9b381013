#pragma once

#include <cstddef>
#include <functional>

namespace irrevkit {

// Worker count: IRREVKIT_THREADS if set and positive, else the hardware count.
unsigned worker_count();

// Runs body(i) for i in [0, n). Calls made from inside a worker run serially,
// so nested loops never oversubscribe. Exceptions propagate from the lowest index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace irrevkit
