#pragma once

#include <cstdint>
#include <functional>

namespace celo {

// Runs fn(0..n-1) across up to `workers` threads. Each index owns its own
// output slot, so results do not depend on the worker count or scheduling
// order. workers <= 1 runs inline.
void parallel_for(int64_t n, int workers, const std::function<void(int64_t)>& fn);

}  // namespace celo
