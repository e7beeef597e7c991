#pragma once

#include <cstdint>
#include <vector>

#include "celo/record.hpp"
#include "celo/tensor.hpp"

namespace celo {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ParamSet m;
  ParamSet v;
  int64_t t = 0;
  bool diverged = false;
};

AdamState make_adam_state(const ParamSet& theta_like);
// Kingma-Ba step with bias correction; non-finite gradients flag the state.
void adam_step(const AdamConfig& config, ParamSet& theta, const ParamSet& grads,
               AdamState& state);

struct SgdmState {
  ParamSet velocity;
  bool diverged = false;
};

SgdmState make_sgdm_state(const ParamSet& theta_like);
// Heavy ball: b <- mu*b + g; theta <- theta - lr*b.
void sgdm_step(double lr, double mu, ParamSet& theta, const ParamSet& grads,
               SgdmState& state);

// Learning rates 10^(k/2) covering [lo, hi] inclusive; bounds must be
// half-powers of ten.
std::vector<double> half_power_sweep(double lo = 1e-7, double hi = 1.0);

// Index of the best run by smoothed final loss. Records must share a task
// and be ordered by ascending learning rate; ties resolve to the earlier
// (smaller-rate) entry. Throws if every run diverged.
size_t best_trial(const std::vector<RunRecord>& records);

}  // namespace celo
