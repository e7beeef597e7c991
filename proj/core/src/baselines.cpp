#include "celo/baselines.hpp"

#include <cmath>
#include <limits>

#include "celo/error.hpp"

namespace celo {

namespace {

ParamSet zeros_like(const ParamSet& like) {
  ParamSet out;
  for (const auto& e : like) out.add(e.name, Tensor(e.tensor.shape()));
  return out;
}

}  // namespace

AdamState make_adam_state(const ParamSet& theta_like) {
  AdamState state;
  state.m = zeros_like(theta_like);
  state.v = zeros_like(theta_like);
  return state;
}

void adam_step(const AdamConfig& config, ParamSet& theta, const ParamSet& grads,
               AdamState& state) {
  CELO_CHECK(theta.same_layout(grads), "theta/gradient layout mismatch");
  if (!grads.all_finite()) {
    state.diverged = true;
    return;
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < theta.size(); ++i) {
    Tensor& p = theta.entry(i).tensor;
    const Tensor& g = grads.entry(i).tensor;
    Tensor& m = state.m.entry(i).tensor;
    Tensor& v = state.v.entry(i).tensor;
    for (int64_t k = 0; k < p.numel(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= config.lr * (mhat / (std::sqrt(vhat) + config.eps));
    }
  }
  if (!theta.all_finite()) state.diverged = true;
}

SgdmState make_sgdm_state(const ParamSet& theta_like) {
  SgdmState state;
  state.velocity = zeros_like(theta_like);
  return state;
}

void sgdm_step(double lr, double mu, ParamSet& theta, const ParamSet& grads,
               SgdmState& state) {
  CELO_CHECK(theta.same_layout(grads), "theta/gradient layout mismatch");
  if (!grads.all_finite()) {
    state.diverged = true;
    return;
  }
  for (size_t i = 0; i < theta.size(); ++i) {
    Tensor& p = theta.entry(i).tensor;
    const Tensor& g = grads.entry(i).tensor;
    Tensor& b = state.velocity.entry(i).tensor;
    for (int64_t k = 0; k < p.numel(); ++k) {
      b[k] = mu * b[k] + g[k];
      p[k] -= lr * b[k];
    }
  }
  if (!theta.all_finite()) state.diverged = true;
}

std::vector<double> half_power_sweep(double lo, double hi) {
  CELO_CHECK(lo > 0 && lo <= hi, "sweep bounds must satisfy 0 < lo <= hi");
  const double klo = 2.0 * std::log10(lo);
  const double khi = 2.0 * std::log10(hi);
  const auto round_int = [](double x) { return std::llround(x); };
  CELO_CHECK(std::abs(klo - static_cast<double>(round_int(klo))) < 1e-9 &&
                 std::abs(khi - static_cast<double>(round_int(khi))) < 1e-9,
             "sweep bounds must be half powers of 10");
  std::vector<double> rates;
  for (long long k = round_int(klo); k <= round_int(khi); ++k) {
    rates.push_back(std::pow(10.0, static_cast<double>(k) / 2.0));
  }
  return rates;
}

size_t best_trial(const std::vector<RunRecord>& records) {
  CELO_CHECK(!records.empty(), "best_trial needs at least one record");
  size_t best = records.size();
  double best_loss = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < records.size(); ++i) {
    CELO_CHECK(records[i].task_id == records[0].task_id,
               "best_trial records must share a task");
    const double fl = final_loss(records[i]);
    if (!std::isfinite(fl)) continue;
    if (fl < best_loss) {
      best_loss = fl;
      best = i;
    }
  }
  if (best == records.size()) throw Error("no valid baseline: every trial diverged");
  return best;
}

}  // namespace celo
