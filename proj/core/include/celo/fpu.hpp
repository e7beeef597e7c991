#pragma once

namespace celo {

// Flushes subnormal doubles to zero (FTZ + DAZ) for the calling thread.
// Long decays drive accumulators through the subnormal range, where x86
// microcode costs ~100 cycles per op; flushing keeps throughput flat.
// Call once at process start; parallel_for replicates the caller's mode
// into its workers, so results never depend on the worker count.
void flush_denormals_to_zero();

}  // namespace celo
