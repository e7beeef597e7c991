#pragma once

#include <string>

namespace celo {

// Shortest round-trip decimal form; used everywhere we persist doubles so
// reruns produce byte-identical files.
std::string format_double(double value);

}  // namespace celo
