#include "celo/task.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "celo/error.hpp"

namespace celo {

TaskInstance with_tau(TaskInstance task, double tau) {
  CELO_CHECK(tau > 0.0, "tau must be positive");
  task.tau = tau;
  return task;
}

namespace {

Batch gather_rows(const Dataset& data, const std::vector<int64_t>& rows) {
  const int64_t dim = data.feature_dim();
  Batch batch;
  batch.inputs = Tensor({static_cast<int64_t>(rows.size()), dim});
  batch.labels.resize(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const double* src = data.inputs.data() + rows[i] * dim;
    std::copy(src, src + dim, batch.inputs.data() + static_cast<int64_t>(i) * dim);
    batch.labels[i] = data.labels[static_cast<size_t>(rows[i])];
  }
  return batch;
}

}  // namespace

Batch sample_batch(const TaskInstance& task, RngStream rng) {
  const Dataset& data = *task.data;
  CELO_CHECK(data.size() > 0, "cannot sample from an empty dataset");
  CELO_CHECK(task.batch_size <= data.size(), "batch size exceeds dataset size");
  std::vector<int64_t> rows(static_cast<size_t>(task.batch_size));
  for (int64_t& r : rows) {
    r = static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(data.size())));
  }
  return gather_rows(data, rows);
}

Batch sample_batch_permutation(const TaskInstance& task, RngStream rng) {
  const Dataset& data = *task.data;
  CELO_CHECK(task.batch_size == data.size(),
             "permutation mode requires batch size == dataset size");
  std::vector<int64_t> rows(static_cast<size_t>(data.size()));
  std::iota(rows.begin(), rows.end(), 0);
  for (int64_t i = data.size() - 1; i > 0; --i) {
    const int64_t j =
        static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(i + 1)));
    std::swap(rows[static_cast<size_t>(i)], rows[static_cast<size_t>(j)]);
  }
  return gather_rows(data, rows);
}

uint64_t batch_hash(const Batch& batch) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](uint64_t bits) {
    h ^= bits;
    h *= 0x100000001b3ull;
  };
  for (double v : batch.inputs.values()) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    mix(bits);
  }
  for (uint16_t l : batch.labels) mix(l);
  return h;
}

LossGrad loss_and_grad(const TaskInstance& task, const ParamSet& theta, const Batch& batch) {
  CELO_CHECK(task.tau > 0.0, "tau must be positive");
  const double tau = task.tau;

  const ParamSet* eval_params = &theta;
  ParamSet scaled;
  if (tau != 1.0) {
    scaled = theta;
    scale(scaled, tau);
    eval_params = &scaled;
  }

  MlpCache cache;
  const Tensor logits = mlp_forward(task.net, *eval_params, batch.inputs, &cache);
  const int64_t n = logits.extent(0), k = logits.extent(1);

  // Mean cross-entropy with the usual max-shift; d(loss)/d(logits) =
  // (softmax - onehot) / n.
  double loss = 0.0;
  Tensor dlogits({n, k});
  for (int64_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * k;
    double m = row[0];
    for (int64_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) z += std::exp(row[j] - m);
    const double logz = std::log(z) + m;
    const int64_t label = batch.labels[static_cast<size_t>(i)];
    loss += logz - row[label];
    double* drow = dlogits.data() + i * k;
    for (int64_t j = 0; j < k; ++j) {
      drow[j] = std::exp(row[j] - logz) / static_cast<double>(n);
    }
    drow[label] -= 1.0 / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);

  LossGrad out;
  out.loss = loss;
  if (!std::isfinite(loss)) {
    out.diverged = true;
    return out;
  }

  MlpGrads grads = mlp_backward(task.net, *eval_params, cache, dlogits);
  if (tau != 1.0) scale(grads.params, tau);  // chain rule through tau*theta
  if (!grads.params.all_finite()) {
    out.diverged = true;
    out.loss = loss;
    return out;
  }
  out.grads = std::move(grads.params);
  return out;
}

ParamSet augment_init(const ParamSet& theta0, double tau) {
  CELO_CHECK(tau > 0.0, "tau must be positive");
  ParamSet out = theta0;
  scale(out, 1.0 / tau);
  return out;
}

double sample_tau(RngStream& rng) {
  const double u = -3.0 + 6.0 * rng.next_double();
  return std::pow(10.0, u);
}

namespace {

TaskInstance make_task(std::string id, std::shared_ptr<const Dataset> data,
                       std::vector<int64_t> widths, Act act, int64_t batch_size) {
  TaskInstance task;
  task.id = std::move(id);
  task.data = std::move(data);
  task.net = make_mlp_spec(std::move(widths), act);
  task.batch_size = batch_size;
  return task;
}

}  // namespace

std::vector<TaskInstance> make_meta_train_suite(const SuiteConfig& config) {
  std::vector<TaskInstance> suite;
  RngStream root(config.seed);
  if (!config.dataset_files.empty()) {
    for (size_t i = 0; i < config.dataset_files.size(); ++i) {
      auto data = std::make_shared<Dataset>(load_dataset(config.dataset_files[i]));
      const int64_t classes = data->class_count;
      const int64_t dim = data->feature_dim();
      suite.push_back(make_task("mt" + std::to_string(i), std::move(data),
                                {dim, 32, classes}, Act::ReLU, config.batch_size));
    }
    return suite;
  }
  CELO_CHECK(config.count >= 1, "suite needs at least one task");
  for (int64_t i = 0; i < config.count; ++i) {
    auto data = std::make_shared<Dataset>(
        synthesize_dataset(config.classes, config.dim, config.examples,
                           root.child("meta_train_data", static_cast<uint64_t>(i)),
                           config.margin));
    suite.push_back(make_task("mt" + std::to_string(i), std::move(data),
                              {config.dim, 32, config.classes}, Act::ReLU,
                              config.batch_size));
  }
  return suite;
}

std::vector<TaskInstance> make_eval_suite(const SuiteConfig& config) {
  RngStream root(config.seed);
  const int64_t c = config.classes;
  const int64_t d = config.dim;
  struct Variant {
    std::vector<int64_t> widths;
    Act act;
    int64_t batch;
  };
  const std::vector<Variant> variants = {
      {{d, 32, 32, c}, Act::ReLU, 64},
      {{d, 48, c}, Act::Tanh, 32},
      {{d, 32, 32, 32, c}, Act::ReLU, 128},
      {{d, 16, c}, Act::ReLU, 64},
      {{d, 64, c}, Act::Tanh, 64},
  };
  std::vector<TaskInstance> suite;
  const int64_t count = std::min<int64_t>(config.count, static_cast<int64_t>(variants.size()));
  CELO_CHECK(count >= 1, "suite needs at least one task");
  for (int64_t i = 0; i < count; ++i) {
    const Variant& v = variants[static_cast<size_t>(i)];
    auto data = std::make_shared<Dataset>(
        synthesize_dataset(c, d, config.examples,
                           root.child("eval_data", static_cast<uint64_t>(i)),
                           config.margin));
    suite.push_back(make_task("ev" + std::to_string(i), std::move(data), v.widths, v.act,
                              std::min<int64_t>(v.batch, config.examples)));
  }
  return suite;
}

}  // namespace celo
