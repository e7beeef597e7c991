#pragma once

#include <memory>
#include <optional>
#include <string>

#include "celo/baselines.hpp"
#include "celo/optimizer.hpp"
#include "celo/record.hpp"
#include "celo/rng.hpp"
#include "celo/task.hpp"

namespace celo {

// Anything that can drive an inner training loop.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual std::string name() const = 0;
  virtual void reset(const ParamSet& theta_like, int64_t horizon) = 0;
  // Updates theta in place; returns the step's eta when the optimizer
  // emits a schedule.
  virtual std::optional<double> step(ParamSet& theta, const ParamSet& grads,
                                     double loss) = 0;
  virtual bool diverged() const = 0;
};

std::unique_ptr<Optimizer> make_adam_optimizer(const AdamConfig& config);
std::unique_ptr<Optimizer> make_sgdm_optimizer(double lr, double mu = 0.9);
std::unique_ptr<Optimizer> make_celo_optimizer(CeloParams params, CeloVariant variant,
                                               std::string name = "celo");

// Runs `steps` inner iterations. The loss at theta_t is recorded before the
// update, the optimizer is told the full horizon up front, and everything
// derives from `stream`, so reruns are bit-identical. Divergence stops the
// run and pads the tail with +inf.
RunRecord run_training(Optimizer& optimizer, const TaskInstance& task, int64_t steps,
                       const RngStream& stream);

}  // namespace celo
