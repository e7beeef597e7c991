#include "celo/runner.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "celo/error.hpp"
#include "celo/format.hpp"

namespace celo {

namespace {

class AdamOptimizer final : public Optimizer {
 public:
  explicit AdamOptimizer(const AdamConfig& config) : config_(config) {}

  std::string name() const override { return "adam@" + format_double(config_.lr); }

  void reset(const ParamSet& theta_like, int64_t) override {
    state_ = make_adam_state(theta_like);
  }

  std::optional<double> step(ParamSet& theta, const ParamSet& grads, double) override {
    adam_step(config_, theta, grads, state_);
    return std::nullopt;
  }

  bool diverged() const override { return state_.diverged; }

 private:
  AdamConfig config_;
  AdamState state_;
};

class SgdmOptimizer final : public Optimizer {
 public:
  SgdmOptimizer(double lr, double mu) : lr_(lr), mu_(mu) {}

  std::string name() const override { return "sgdm@" + format_double(lr_); }

  void reset(const ParamSet& theta_like, int64_t) override {
    state_ = make_sgdm_state(theta_like);
  }

  std::optional<double> step(ParamSet& theta, const ParamSet& grads, double) override {
    sgdm_step(lr_, mu_, theta, grads, state_);
    return std::nullopt;
  }

  bool diverged() const override { return state_.diverged; }

 private:
  double lr_;
  double mu_;
  SgdmState state_;
};

class CeloOptimizer final : public Optimizer {
 public:
  CeloOptimizer(CeloParams params, CeloVariant variant, std::string name)
      : params_(std::move(params)), variant_(variant), name_(std::move(name)) {}

  std::string name() const override { return name_; }

  void reset(const ParamSet& theta_like, int64_t horizon) override {
    state_ = init_state(theta_like, horizon, params_.config.lstm_hidden);
  }

  std::optional<double> step(ParamSet& theta, const ParamSet& grads, double loss) override {
    const CeloStepInfo info = celo_update(params_, variant_, theta, grads, loss, state_);
    return info.eta;
  }

  bool diverged() const override { return state_.diverged; }

 private:
  CeloParams params_;
  CeloVariant variant_;
  std::string name_;
  CeloState state_;
};

}  // namespace

std::unique_ptr<Optimizer> make_adam_optimizer(const AdamConfig& config) {
  return std::make_unique<AdamOptimizer>(config);
}

std::unique_ptr<Optimizer> make_sgdm_optimizer(double lr, double mu) {
  return std::make_unique<SgdmOptimizer>(lr, mu);
}

std::unique_ptr<Optimizer> make_celo_optimizer(CeloParams params, CeloVariant variant,
                                               std::string name) {
  return std::make_unique<CeloOptimizer>(std::move(params), variant, std::move(name));
}

RunRecord run_training(Optimizer& optimizer, const TaskInstance& task, int64_t steps,
                       const RngStream& stream) {
  CELO_CHECK(steps >= 1, "need at least one training step");
  RunRecord record;
  record.task_id = task.id;
  record.optimizer_id = optimizer.name();
  record.steps = steps;
  record.losses.reserve(static_cast<size_t>(steps));

  ParamSet theta = init_params(task.net, stream.child("theta0"));
  if (task.tau != 1.0) theta = augment_init(theta, task.tau);
  optimizer.reset(theta, steps);

  bool track_eta = false;
  for (int64_t t = 0; t < steps; ++t) {
    const Batch batch = sample_batch(task, stream.child("batch", static_cast<uint64_t>(t)));
    LossGrad lg = loss_and_grad(task, theta, batch);
    record.losses.push_back(lg.loss);
    if (lg.diverged) {
      record.diverged = true;
      break;
    }
    const std::optional<double> eta = optimizer.step(theta, lg.grads, lg.loss);
    if (eta.has_value()) {
      track_eta = true;
      record.eta.push_back(*eta);
    }
    if (optimizer.diverged()) {
      record.diverged = true;
      break;
    }
  }
  if (record.diverged) {
    record.losses.resize(static_cast<size_t>(steps),
                         std::numeric_limits<double>::infinity());
    if (track_eta) record.eta.resize(static_cast<size_t>(steps), 0.0);
  }
  return record;
}

}  // namespace celo
