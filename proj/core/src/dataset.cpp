#include "celo/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace celo {

namespace {

constexpr char kMagic[8] = {'C', 'E', 'L', 'O', 'D', 'A', 'T', 'A'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
bool read_pod(std::ifstream& in, T* value) {
  in.read(reinterpret_cast<char*>(value), sizeof(*value));
  return in.gcount() == sizeof(*value);
}

}  // namespace

Dataset synthesize_dataset(int64_t classes, int64_t dim, int64_t n, const RngStream& rng,
                           double margin) {
  CELO_CHECK(classes >= 2, "need at least two classes");
  CELO_CHECK(dim >= 1, "feature dim must be positive");
  CELO_CHECK(n >= classes, "need at least one example per class");

  // Class means: random direction scaled to length `margin`.
  std::vector<Tensor> means;
  means.reserve(static_cast<size_t>(classes));
  for (int64_t c = 0; c < classes; ++c) {
    RngStream cr = rng.child("class_mean", static_cast<uint64_t>(c));
    Tensor mu({dim});
    for (double& v : mu.values()) v = cr.next_gaussian();
    const double norm = mu.l2_norm();
    const double s = norm > 0.0 ? margin / norm : 0.0;
    for (double& v : mu.values()) v *= s;
    means.push_back(std::move(mu));
  }

  Dataset ds;
  ds.class_count = classes;
  ds.inputs = Tensor({n, dim});
  ds.labels.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const int64_t label = i % classes;  // round-robin keeps every class populated
    ds.labels[static_cast<size_t>(i)] = static_cast<uint16_t>(label);
    RngStream xr = rng.child("example", static_cast<uint64_t>(i));
    const Tensor& mu = means[static_cast<size_t>(label)];
    double* row = ds.inputs.data() + i * dim;
    for (int64_t j = 0; j < dim; ++j) {
      row[j] = static_cast<double>(static_cast<float>(mu[j] + xr.next_gaussian()));
    }
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(DatasetError::Kind::Io, "cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<uint32_t>(dataset.size()));
  write_pod(out, static_cast<uint32_t>(dataset.feature_dim()));
  write_pod(out, static_cast<uint32_t>(dataset.class_count));
  for (double v : dataset.inputs.values()) write_pod(out, static_cast<float>(v));
  for (uint16_t l : dataset.labels) write_pod(out, l);
  if (!out) throw DatasetError(DatasetError::Kind::Io, "write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::Io, "cannot open " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DatasetError(DatasetError::Kind::BadMagic, "malformed header in " + path);
  }
  uint32_t version = 0, n = 0, dim = 0, classes = 0;
  if (!read_pod(in, &version) || !read_pod(in, &n) || !read_pod(in, &dim) ||
      !read_pod(in, &classes)) {
    throw DatasetError(DatasetError::Kind::BadMagic, "malformed header in " + path);
  }
  if (version != kVersion) {
    throw DatasetError(DatasetError::Kind::BadVersion,
                       "unsupported dataset version " + std::to_string(version));
  }

  Dataset ds;
  ds.class_count = classes;
  ds.inputs = Tensor({static_cast<int64_t>(n), static_cast<int64_t>(dim)});
  uint64_t checksum = 0xcbf29ce484222325ull;
  const auto mix = [&checksum](const void* bytes, size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < len; ++i) {
      checksum ^= p[i];
      checksum *= 0x100000001b3ull;
    }
  };
  for (double& v : ds.inputs.values()) {
    float f = 0.0f;
    if (!read_pod(in, &f)) {
      throw DatasetError(DatasetError::Kind::TruncatedPayload,
                         "truncated payload in " + path);
    }
    mix(&f, sizeof(f));
    v = static_cast<double>(f);
  }
  ds.labels.resize(n);
  for (uint16_t& l : ds.labels) {
    if (!read_pod(in, &l)) {
      throw DatasetError(DatasetError::Kind::TruncatedPayload,
                         "truncated payload in " + path);
    }
    mix(&l, sizeof(l));
    if (l >= classes) {
      throw DatasetError(DatasetError::Kind::LabelOutOfRange,
                         "label out of range in " + path);
    }
  }
  ds.payload_checksum = checksum;
  return ds;
}

}  // namespace celo
