#include "celo/rng.hpp"

#include <cmath>
#include <numbers>

#include "celo/error.hpp"

namespace celo {

namespace {

constexpr uint64_t kGamma = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer.
uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

RngStream::RngStream(uint64_t seed) : key_(mix64(seed + kGamma)) {}

RngStream RngStream::child(std::string_view purpose, uint64_t index) const {
  uint64_t k = mix64(key_ ^ fnv1a(purpose));
  k = mix64(k + (index + 1) * kGamma);
  return RngStream(k, 0);
}

uint64_t RngStream::next_u64() { return mix64(key_ + (++counter_) * kGamma); }

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  double u1 = next_double();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = r * std::sin(t);
  has_cached_gaussian_ = true;
  return r * std::cos(t);
}

uint64_t RngStream::uniform_index(uint64_t n) {
  CELO_CHECK(n > 0, "uniform_index needs n > 0");
  return static_cast<uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

}  // namespace celo
