#include "celo/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace celo {

namespace {

constexpr char kMagic[6] = {'C', 'E', 'L', 'O', '1', '\0'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
void read_pod(std::ifstream& in, T* value) {
  in.read(reinterpret_cast<char*>(value), sizeof(*value));
  if (in.gcount() != sizeof(*value)) {
    throw CheckpointError(CheckpointError::Kind::Truncated, "truncated checkpoint");
  }
}

}  // namespace

Tensor& TensorArchive::add(std::string name, Tensor tensor) {
  entries.push_back({std::move(name), std::move(tensor)});
  return entries.back().tensor;
}

const Tensor* TensorArchive::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

const Tensor& TensorArchive::require(std::string_view name) const {
  const Tensor* t = find(name);
  if (t == nullptr) {
    throw CheckpointError(CheckpointError::Kind::Malformed,
                          "checkpoint missing tensor " + std::string(name));
  }
  return *t;
}

void write_archive(const std::string& path, const TensorArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<uint64_t>(archive.entries.size()));

  uint64_t offset = 0;
  for (const NamedTensor& e : archive.entries) {
    write_pod(out, static_cast<uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_pod(out, static_cast<uint8_t>(0));  // dtype f64
    write_pod(out, static_cast<uint8_t>(e.tensor.rank()));
    for (int64_t ext : e.tensor.shape()) write_pod(out, static_cast<uint64_t>(ext));
    write_pod(out, offset);
    offset += static_cast<uint64_t>(e.tensor.numel()) * sizeof(double);
  }

  uint64_t checksum = 0xcbf29ce484222325ull;
  for (const NamedTensor& e : archive.entries) {
    const char* bytes = reinterpret_cast<const char*>(e.tensor.data());
    const size_t len = static_cast<size_t>(e.tensor.numel()) * sizeof(double);
    out.write(bytes, static_cast<std::streamsize>(len));
    for (size_t i = 0; i < len; ++i) {
      checksum ^= static_cast<unsigned char>(bytes[i]);
      checksum *= 0x100000001b3ull;
    }
  }
  write_pod(out, checksum);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "write failed: " + path);
}

TensorArchive read_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path);

  char magic[6];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(CheckpointError::Kind::BadMagic, "bad magic in " + path);
  }
  uint32_t version = 0;
  read_pod(in, &version);
  if (version != kVersion) {
    throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  uint64_t count = 0;
  read_pod(in, &count);

  TensorArchive archive;
  std::vector<uint64_t> offsets;
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = 0;
    read_pod(in, &name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (in.gcount() != static_cast<std::streamsize>(name_len)) {
      throw CheckpointError(CheckpointError::Kind::Truncated, "truncated checkpoint");
    }
    uint8_t dtype = 0, rank = 0;
    read_pod(in, &dtype);
    if (dtype != 0) {
      throw CheckpointError(CheckpointError::Kind::Malformed, "unknown dtype");
    }
    read_pod(in, &rank);
    std::vector<int64_t> shape(rank);
    for (uint8_t d = 0; d < rank; ++d) {
      uint64_t ext = 0;
      read_pod(in, &ext);
      shape[d] = static_cast<int64_t>(ext);
    }
    uint64_t offset = 0;
    read_pod(in, &offset);
    offsets.push_back(offset);
    archive.add(std::move(name), rank == 0 ? Tensor({1}) : Tensor(std::move(shape)));
  }

  uint64_t checksum = 0xcbf29ce484222325ull;
  for (NamedTensor& e : archive.entries) {
    char* bytes = reinterpret_cast<char*>(e.tensor.data());
    const size_t len = static_cast<size_t>(e.tensor.numel()) * sizeof(double);
    in.read(bytes, static_cast<std::streamsize>(len));
    if (in.gcount() != static_cast<std::streamsize>(len)) {
      throw CheckpointError(CheckpointError::Kind::Truncated, "truncated checkpoint");
    }
    for (size_t i = 0; i < len; ++i) {
      checksum ^= static_cast<unsigned char>(bytes[i]);
      checksum *= 0x100000001b3ull;
    }
  }
  uint64_t stored = 0;
  read_pod(in, &stored);
  if (stored != checksum) {
    throw CheckpointError(CheckpointError::Kind::ChecksumMismatch,
                          "payload checksum mismatch in " + path);
  }
  return archive;
}

namespace {

void add_param_set(TensorArchive& archive, const std::string& prefix, const ParamSet& params) {
  for (const auto& e : params) archive.add(prefix + e.name, e.tensor);
}

ParamSet read_param_set(const TensorArchive& archive, const std::string& prefix) {
  ParamSet out;
  for (const auto& e : archive.entries) {
    if (e.name.rfind(prefix, 0) == 0) out.add(e.name.substr(prefix.size()), e.tensor);
  }
  return out;
}

void add_celo_state(TensorArchive& archive, const std::string& prefix, const CeloState& s,
                    const ParamSet& theta_like) {
  Tensor window({static_cast<int64_t>(kLossWindowCap)});
  for (size_t i = 0; i < s.loss_window.size(); ++i) window[static_cast<int64_t>(i)] = s.loss_window[i];
  archive.add(prefix + "info",
              Tensor::from({8}, {static_cast<double>(s.step), static_cast<double>(s.horizon),
                                 s.diverged ? 1.0 : 0.0, s.loss_seeded ? 1.0 : 0.0,
                                 s.first_loss, static_cast<double>(s.loss_window.size()),
                                 0.0, 0.0}));
  archive.add(prefix + "loss_ema",
              Tensor::from({4}, {s.loss_ema[0], s.loss_ema[1], s.loss_ema[2], s.loss_ema[3]}));
  archive.add(prefix + "loss_window", std::move(window));
  archive.add(prefix + "lstm_h", s.lstm_h);
  archive.add(prefix + "lstm_c", s.lstm_c);
  for (size_t i = 0; i < s.stats.size(); ++i) {
    const std::string name = theta_like.entry(i).name;
    const TensorStats& ts = s.stats[i];
    archive.add(prefix + "m0/" + name, ts.momentum[0]);
    archive.add(prefix + "m1/" + name, ts.momentum[1]);
    archive.add(prefix + "m2/" + name, ts.momentum[2]);
    archive.add(prefix + "v/" + name, ts.second_moment);
    if (!ts.afac_row.empty()) {
      archive.add(prefix + "afr/" + name, ts.afac_row);
      archive.add(prefix + "afc/" + name, ts.afac_col);
    }
  }
}

CeloState read_celo_state(const TensorArchive& archive, const std::string& prefix,
                          const ParamSet& theta_like) {
  const Tensor& info = archive.require(prefix + "info");
  CeloState s;
  s.step = static_cast<int64_t>(info[0]);
  s.horizon = static_cast<int64_t>(info[1]);
  s.diverged = info[2] != 0.0;
  s.loss_seeded = info[3] != 0.0;
  s.first_loss = info[4];
  const auto window_count = static_cast<size_t>(info[5]);
  const Tensor& ema = archive.require(prefix + "loss_ema");
  for (size_t i = 0; i < 4; ++i) s.loss_ema[i] = ema[static_cast<int64_t>(i)];
  const Tensor& window = archive.require(prefix + "loss_window");
  for (size_t i = 0; i < window_count; ++i) s.loss_window.push_back(window[static_cast<int64_t>(i)]);
  s.lstm_h = archive.require(prefix + "lstm_h");
  s.lstm_c = archive.require(prefix + "lstm_c");
  for (const auto& e : theta_like) {
    TensorStats ts;
    ts.momentum[0] = archive.require(prefix + "m0/" + e.name);
    ts.momentum[1] = archive.require(prefix + "m1/" + e.name);
    ts.momentum[2] = archive.require(prefix + "m2/" + e.name);
    ts.second_moment = archive.require(prefix + "v/" + e.name);
    if (const Tensor* r = archive.find(prefix + "afr/" + e.name)) {
      ts.afac_row = *r;
      ts.afac_col = archive.require(prefix + "afc/" + e.name);
    }
    s.stats.push_back(std::move(ts));
  }
  return s;
}

}  // namespace

void checkpoint_save(const CeloParams& phi, const MetaState& meta, const std::string& path) {
  TensorArchive archive;
  archive.add("phi/config",
              Tensor::from({7}, {phi.config.alpha, phi.config.lambda1, phi.config.lambda2,
                                 static_cast<double>(static_cast<int>(phi.config.form)),
                                 static_cast<double>(static_cast<int>(phi.config.norm)),
                                 static_cast<double>(phi.config.rule_hidden),
                                 static_cast<double>(phi.config.lstm_hidden)}));
  add_param_set(archive, "phi/rule/", phi.rule);
  add_param_set(archive, "phi/sched/", phi.scheduler);

  archive.add("meta/info",
              Tensor::from({4}, {static_cast<double>(static_cast<int>(meta.stage)),
                                 static_cast<double>(meta.meta_iter),
                                 static_cast<double>(meta.adam_t),
                                 static_cast<double>(meta.pairs.size())}));
  archive.add("meta/adam_m", meta.adam_m);
  archive.add("meta/adam_v", meta.adam_v);
  for (size_t i = 0; i < meta.pairs.size(); ++i) {
    const ParticlePair& pair = meta.pairs[i];
    const std::string prefix = "pair" + std::to_string(i) + "/";
    archive.add(prefix + "info",
                Tensor::from({7}, {static_cast<double>(pair.pair_index),
                                   static_cast<double>(pair.reset_count),
                                   pair.initialized ? 1.0 : 0.0,
                                   static_cast<double>(pair.task_index), pair.tau,
                                   static_cast<double>(pair.horizon),
                                   static_cast<double>(pair.steps)}));
    if (!pair.initialized) continue;
    archive.add(prefix + "xi", pair.xi);
    add_param_set(archive, prefix + "theta_pos/", pair.theta_pos);
    add_param_set(archive, prefix + "theta_neg/", pair.theta_neg);
    add_celo_state(archive, prefix + "state_pos/", pair.state_pos, pair.theta_pos);
    add_celo_state(archive, prefix + "state_neg/", pair.state_neg, pair.theta_neg);
  }
  write_archive(path, archive);
}

std::pair<CeloParams, MetaState> checkpoint_load(const std::string& path) {
  const TensorArchive archive = read_archive(path);

  const Tensor& cfg = archive.require("phi/config");
  CeloParams phi;
  phi.config.alpha = cfg[0];
  phi.config.lambda1 = cfg[1];
  phi.config.lambda2 = cfg[2];
  phi.config.form = static_cast<SchedulerForm>(static_cast<int>(cfg[3]));
  phi.config.norm = static_cast<NormKind>(static_cast<int>(cfg[4]));
  phi.config.rule_hidden = static_cast<int64_t>(cfg[5]);
  phi.config.lstm_hidden = static_cast<int64_t>(cfg[6]);
  phi.rule_spec = make_mlp_spec({kFeatureCount, phi.config.rule_hidden,
                                 phi.config.rule_hidden, 2},
                                Act::ReLU);
  phi.lstm_spec = {kSchedulerInputDim, phi.config.lstm_hidden};
  phi.rule = read_param_set(archive, "phi/rule/");
  phi.scheduler = read_param_set(archive, "phi/sched/");
  if (phi.rule.size() == 0 || phi.scheduler.size() == 0) {
    throw CheckpointError(CheckpointError::Kind::Malformed, "checkpoint missing phi");
  }

  const Tensor& info = archive.require("meta/info");
  MetaState meta;
  meta.stage = static_cast<StageId>(static_cast<int>(info[0]));
  meta.meta_iter = static_cast<int64_t>(info[1]);
  meta.adam_t = static_cast<int64_t>(info[2]);
  meta.adam_m = archive.require("meta/adam_m");
  meta.adam_v = archive.require("meta/adam_v");
  const auto pair_count = static_cast<size_t>(info[3]);
  meta.pairs.resize(pair_count);
  for (size_t i = 0; i < pair_count; ++i) {
    ParticlePair& pair = meta.pairs[i];
    const std::string prefix = "pair" + std::to_string(i) + "/";
    const Tensor& pinfo = archive.require(prefix + "info");
    pair.pair_index = static_cast<int64_t>(pinfo[0]);
    pair.reset_count = static_cast<int64_t>(pinfo[1]);
    pair.initialized = pinfo[2] != 0.0;
    pair.task_index = static_cast<int64_t>(pinfo[3]);
    pair.tau = pinfo[4];
    pair.horizon = static_cast<int64_t>(pinfo[5]);
    pair.steps = static_cast<int64_t>(pinfo[6]);
    if (!pair.initialized) continue;
    pair.xi = archive.require(prefix + "xi");
    pair.theta_pos = read_param_set(archive, prefix + "theta_pos/");
    pair.theta_neg = read_param_set(archive, prefix + "theta_neg/");
    pair.state_pos = read_celo_state(archive, prefix + "state_pos/", pair.theta_pos);
    pair.state_neg = read_celo_state(archive, prefix + "state_neg/", pair.theta_neg);
  }
  return {std::move(phi), std::move(meta)};
}

CeloParams checkpoint_load_params(const std::string& path) {
  return checkpoint_load(path).first;
}

}  // namespace celo
