#pragma once

#include <cstdint>
#include <string_view>

namespace celo {

// Counter-based splittable random stream.
//
// A stream is identified by a 64-bit key derived from the root seed and a
// derivation path of (purpose, index) pairs. Identical (seed, path) always
// yields the identical draw sequence, and draws never mutate parent or
// sibling streams, so work can be scheduled across threads in any order
// without changing results.
class RngStream {
 public:
  explicit RngStream(uint64_t seed);

  // Derives an independent child stream. The child's sequence depends only
  // on (this stream's path, purpose, index).
  RngStream child(std::string_view purpose, uint64_t index = 0) const;

  uint64_t next_u64();
  // Uniform in [0, 1).
  double next_double();
  // Standard normal via Box-Muller.
  double next_gaussian();
  // Uniform in [0, n); n > 0.
  uint64_t uniform_index(uint64_t n);

 private:
  RngStream(uint64_t key, int /*tag*/) : key_(key) {}

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

}  // namespace celo
