#pragma once

#include <string>
#include <utility>

#include "celo/error.hpp"
#include "celo/optimizer.hpp"
#include "celo/pes.hpp"
#include "celo/tensor.hpp"

namespace celo {

class CheckpointError : public Error {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, Malformed, Io };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Named-tensor container used by checkpoints. Layout (little-endian):
// magic "CELO1\0", u32 version, u64 tensor count, then per tensor
// (u32 name length, name bytes, u8 dtype=0 for f64, u8 rank, u64 extents,
// u64 payload offset), then contiguous f64 payloads, then a trailing u64
// FNV-1a checksum of the payload bytes.
struct TensorArchive {
  std::vector<NamedTensor> entries;

  Tensor& add(std::string name, Tensor tensor);
  const Tensor* find(std::string_view name) const;
  // Throws Malformed when missing.
  const Tensor& require(std::string_view name) const;
};

void write_archive(const std::string& path, const TensorArchive& archive);
TensorArchive read_archive(const std::string& path);

// Bit-exact round trip of phi and the full meta-training state (AdamW
// moments, counters, and the PES pair ensemble).
void checkpoint_save(const CeloParams& phi, const MetaState& meta, const std::string& path);
std::pair<CeloParams, MetaState> checkpoint_load(const std::string& path);

// Convenience for evaluation: phi only.
CeloParams checkpoint_load_params(const std::string& path);

}  // namespace celo
