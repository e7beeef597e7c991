#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "celo/dataset.hpp"
#include "celo/nets.hpp"
#include "celo/rng.hpp"
#include "celo/tensor.hpp"

namespace celo {

enum class LossKind { CrossEntropy };

// Immutable optimizee task: data source, network shape, loss, and the
// augmentation scalar tau. With tau != 1 the loss is evaluated at tau*theta
// while theta stays the stored parameterization.
struct TaskInstance {
  std::string id;
  std::shared_ptr<const Dataset> data;
  NetSpec net;
  int64_t batch_size = 64;
  LossKind loss = LossKind::CrossEntropy;
  double tau = 1.0;
};

TaskInstance with_tau(TaskInstance task, double tau);

struct Batch {
  Tensor inputs;                 // {batch, features}
  std::vector<uint16_t> labels;  // per-row class ids
};

// Uniform-with-replacement rows; deterministic under the stream.
Batch sample_batch(const TaskInstance& task, RngStream rng);
// Test mode: batch_size == dataset size, rows form a permutation.
Batch sample_batch_permutation(const TaskInstance& task, RngStream rng);
uint64_t batch_hash(const Batch& batch);

struct LossGrad {
  double loss = 0.0;
  ParamSet grads;
  bool diverged = false;
};

// Mean cross-entropy of the net evaluated at tau*theta, with gradients
// taken w.r.t. the stored theta. A non-finite loss flags `diverged`
// instead of throwing.
LossGrad loss_and_grad(const TaskInstance& task, const ParamSet& theta, const Batch& batch);

// theta0 / tau entrywise, so the function realized at initialization is
// unchanged under the tau re-parameterization.
ParamSet augment_init(const ParamSet& theta0, double tau);

// tau = 10^u with u uniform on [-3, 3].
double sample_tau(RngStream& rng);

struct SuiteConfig {
  int64_t count = 4;
  int64_t classes = 10;
  int64_t dim = 64;  // 8x8 flattened
  int64_t examples = 2048;
  int64_t batch_size = 64;
  double margin = 1.2;
  uint64_t seed = 0;
  // When non-empty, datasets are loaded from these files instead of
  // being synthesized; count then follows the file list.
  std::vector<std::string> dataset_files;
};

// Image-MLP style meta-training tasks: widths {dim, 32, classes}, ReLU,
// cross-entropy.
std::vector<TaskInstance> make_meta_train_suite(const SuiteConfig& config);

// Held-out structural variants: deeper MLPs, Tanh, other widths and batch
// sizes; datasets drawn from shifted seeds.
std::vector<TaskInstance> make_eval_suite(const SuiteConfig& config);

}  // namespace celo
