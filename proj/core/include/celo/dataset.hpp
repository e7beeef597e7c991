#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "celo/error.hpp"
#include "celo/rng.hpp"
#include "celo/tensor.hpp"

namespace celo {

struct Dataset {
  Tensor inputs;                 // {num_examples, feature_dim}
  std::vector<uint16_t> labels;  // class ids in [0, class_count)
  int64_t class_count = 0;
  uint64_t payload_checksum = 0;  // FNV-1a over the file payload; 0 when synthesized

  int64_t size() const { return inputs.empty() ? 0 : inputs.extent(0); }
  int64_t feature_dim() const { return inputs.empty() ? 0 : inputs.extent(1); }
};

class DatasetError : public Error {
 public:
  enum class Kind { BadMagic, BadVersion, TruncatedPayload, LabelOutOfRange, Io };

  DatasetError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Gaussian class-mean mixture: class means sit at distance `margin` from
// the origin in random directions, examples add unit isotropic noise.
// Inputs are quantized to float32 so disk round trips are exact.
Dataset synthesize_dataset(int64_t classes, int64_t dim, int64_t n, const RngStream& rng,
                           double margin = 4.0);

// Binary container: magic "CELODATA", u32 version=1, u32 num_examples,
// u32 feature_dim, u32 class_count, float32 inputs, uint16 labels.
// Little-endian throughout.
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

}  // namespace celo
