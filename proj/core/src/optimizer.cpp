#include "celo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "celo/error.hpp"

namespace celo {

SchedulerForm scheduler_form_from_name(const std::string& name) {
  if (name == "linear") return SchedulerForm::Linear;
  if (name == "linear_clip") return SchedulerForm::LinearClip;
  if (name == "exp") return SchedulerForm::Exp;
  throw Error("unknown scheduler form: " + name);
}

CeloVariant celo_variant_from_name(const std::string& name) {
  if (name == "full") return CeloVariant::Full;
  if (name == "no_scheduler") return CeloVariant::NoScheduler;
  if (name == "adam_rule_with_scheduler") return CeloVariant::AdamRuleWithScheduler;
  throw Error("unknown celo variant: " + name);
}

std::string to_string(SchedulerForm form) {
  switch (form) {
    case SchedulerForm::Linear: return "linear";
    case SchedulerForm::LinearClip: return "linear_clip";
    case SchedulerForm::Exp: return "exp";
  }
  return "exp";
}

std::string to_string(CeloVariant variant) {
  switch (variant) {
    case CeloVariant::Full: return "full";
    case CeloVariant::NoScheduler: return "no_scheduler";
    case CeloVariant::AdamRuleWithScheduler: return "adam_rule_with_scheduler";
  }
  return "full";
}

double scheduler_eta(SchedulerForm form, double alpha, double o) {
  switch (form) {
    case SchedulerForm::Linear:
      return alpha * o;
    case SchedulerForm::LinearClip:
      return std::clamp(alpha * o, 0.0, 10.0);
    case SchedulerForm::Exp:
      return alpha * std::exp(o);
  }
  return alpha;
}

CeloParams make_celo_params(const CeloConfig& config, const RngStream& rng) {
  CELO_CHECK(config.rule_hidden > 0 && config.lstm_hidden > 0,
             "hidden sizes must be positive");
  CELO_CHECK(config.lambda1 > 0 && config.lambda2 > 0 && config.alpha > 0,
             "fixed scalars must be positive");
  CeloParams params;
  params.config = config;
  params.rule_spec =
      make_mlp_spec({kFeatureCount, config.rule_hidden, config.rule_hidden, 2}, Act::ReLU);
  params.rule = init_params(params.rule_spec, rng.child("rule"));
  // Zero output head: the untrained rule moves nothing.
  params.rule.at("w2").fill(0.0);
  params.rule.at("b2").fill(0.0);

  params.lstm_spec = {kSchedulerInputDim, config.lstm_hidden};
  params.scheduler = init_lstm(params.lstm_spec, rng.child("scheduler"));
  // Zero projection: o = 0, so eta = alpha exactly at initialization.
  params.scheduler.add("proj_w", Tensor({config.lstm_hidden}));
  params.scheduler.add("proj_b", Tensor({1}));
  return params;
}

CeloState init_state(const ParamSet& theta_like, int64_t horizon, int64_t lstm_hidden) {
  CELO_CHECK(horizon >= 1, "horizon must be at least 1");
  CeloState state;
  state.horizon = horizon;
  state.lstm_h = Tensor({lstm_hidden});
  state.lstm_c = Tensor({lstm_hidden});
  state.stats.reserve(theta_like.size());
  for (const auto& e : theta_like) {
    TensorStats ts;
    for (auto& m : ts.momentum) m = Tensor(e.tensor.shape());
    ts.second_moment = Tensor(e.tensor.shape());
    if (e.tensor.rank() == 2) {
      ts.afac_row = Tensor({e.tensor.extent(0)});
      ts.afac_col = Tensor({e.tensor.extent(1)});
    }
    state.stats.push_back(std::move(ts));
  }
  return state;
}

void update_accumulators(CeloState& state, const ParamSet& grads, double loss) {
  CELO_CHECK(grads.size() == state.stats.size(), "gradient layout mismatch");
  if (!std::isfinite(loss) || !grads.all_finite()) {
    state.diverged = true;
    return;
  }
  for (size_t i = 0; i < grads.size(); ++i) {
    const Tensor& g = grads.entry(i).tensor;
    TensorStats& ts = state.stats[i];
    for (size_t b = 0; b < kMomentumDecays.size(); ++b) {
      const double beta = kMomentumDecays[b];
      Tensor& m = ts.momentum[b];
      for (int64_t k = 0; k < g.numel(); ++k) {
        m[k] = beta * m[k] + (1.0 - beta) * g[k];
      }
    }
    const double gamma = kSecondMomentDecay;
    Tensor& v = ts.second_moment;
    for (int64_t k = 0; k < g.numel(); ++k) {
      v[k] = gamma * v[k] + (1.0 - gamma) * g[k] * g[k];
    }
    if (g.rank() == 2) {
      const int64_t rows = g.extent(0), cols = g.extent(1);
      for (int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = g.data() + r * cols;
        for (int64_t c = 0; c < cols; ++c) acc += row[c] * row[c];
        ts.afac_row[r] =
            gamma * ts.afac_row[r] + (1.0 - gamma) * acc / static_cast<double>(cols);
      }
      for (int64_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (int64_t r = 0; r < rows; ++r) {
          const double gv = g.at(r, c);
          acc += gv * gv;
        }
        ts.afac_col[c] =
            gamma * ts.afac_col[c] + (1.0 - gamma) * acc / static_cast<double>(rows);
      }
    }
  }
  if (!state.loss_seeded) {
    state.first_loss = loss;
    state.loss_ema.fill(loss);
    state.loss_seeded = true;
  } else {
    for (size_t d = 0; d < kLossEmaDecays.size(); ++d) {
      const double delta = kLossEmaDecays[d];
      state.loss_ema[d] = delta * state.loss_ema[d] + (1.0 - delta) * loss;
    }
  }
  state.loss_window.push_back(loss);
  if (state.loss_window.size() > kLossWindowCap) {
    state.loss_window.erase(state.loss_window.begin());
  }
  state.step += 1;
}

namespace {

// Rescale one feature column to unit second moment over the tensor.
void normalize_column(Tensor& features, int64_t col, int64_t rows) {
  const int64_t width = features.extent(1);
  double acc = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    const double v = features[r * width + col];
    acc += v * v;
  }
  const double rms = std::sqrt(acc / static_cast<double>(rows));
  const double inv = 1.0 / std::max(rms, kFeatureEps);
  for (int64_t r = 0; r < rows; ++r) features[r * width + col] *= inv;
}

void ensure_shape(Tensor& t, std::vector<int64_t> shape) {
  if (t.shape() != shape) t = Tensor(std::move(shape));
}

// Writes the feature rows for one tensor into `features`, reusing its
// storage when the shape already matches.
void fill_features(const CeloState& state, size_t tensor_index, const Tensor& p,
                   const Tensor& g, Tensor& features) {
  CELO_CHECK(tensor_index < state.stats.size(), "tensor index out of range");
  const TensorStats& ts = state.stats[tensor_index];
  CELO_CHECK(p.same_shape(g) && p.same_shape(ts.second_moment),
             "feature shape mismatch");
  const int64_t n = p.numel();
  ensure_shape(features, {n, kFeatureCount});

  const bool is_matrix = p.rank() == 2;
  const int64_t cols = is_matrix ? p.extent(1) : 0;
  double afac_row_mean = 0.0;
  if (is_matrix) {
    for (double v : ts.afac_row.values()) afac_row_mean += v;
    afac_row_mean /= static_cast<double>(ts.afac_row.numel());
  }

  for (int64_t k = 0; k < n; ++k) {
    double* row = features.data() + k * kFeatureCount;
    const double v = ts.second_moment[k];
    const double rsqrt = 1.0 / std::sqrt(v + kFeatureEps);
    row[0] = g[k];
    row[1] = ts.momentum[0][k];
    row[2] = ts.momentum[1][k];
    row[3] = ts.momentum[2][k];
    row[4] = v;
    row[5] = v > 0.0 ? rsqrt : 0.0;  // untouched accumulator carries no signal
    if (is_matrix) {
      const int64_t r = k / cols, c = k % cols;
      row[6] = ts.afac_row[r] * ts.afac_col[c] / std::max(afac_row_mean, kFeatureEps);
    } else {
      row[6] = v;  // rank-1 fallback: the factored estimate degenerates to v
    }
    row[7] = p[k];
    row[8] = ts.momentum[0][k] * rsqrt;
    row[9] = ts.momentum[1][k] * rsqrt;
    row[10] = ts.momentum[2][k] * rsqrt;
  }
  for (int64_t col = 0; col < kStatFeatureCount; ++col) {
    normalize_column(features, col, n);
  }
  const double t = static_cast<double>(state.step);
  for (size_t e = 0; e < kFeatureTimeScales.size(); ++e) {
    const double emb = std::tanh(t / kFeatureTimeScales[e]);
    const int64_t col = kStatFeatureCount + static_cast<int64_t>(e);
    for (int64_t k = 0; k < n; ++k) features[k * kFeatureCount + col] = emb;
  }
}

// Reused per-thread rule-MLP activations; the buffers sit far above the
// malloc mmap threshold, so they are kept per tensor slot — shapes
// alternate across the optimizee tensors and a single shared buffer would
// reallocate on every call.
struct RuleScratch {
  Tensor features;
  Tensor hidden1;
  Tensor hidden2;
  Tensor heads;
};

thread_local RuleScratch t_scratch;
thread_local std::vector<RuleScratch> t_slot_scratch;

void rule_forward(const CeloParams& params, const Tensor& features, Tensor& heads,
                  RuleScratch& scratch) {
  const ParamSet& rule = params.rule;
  matmul(features, rule.at("w0"), scratch.hidden1);
  const Tensor& b0 = rule.at("b0");
  const int64_t n = scratch.hidden1.extent(0), h = scratch.hidden1.extent(1);
  for (int64_t i = 0; i < n; ++i) {
    double* row = scratch.hidden1.data() + i * h;
    for (int64_t j = 0; j < h; ++j) {
      const double z = row[j] + b0[j];
      row[j] = z > 0.0 ? z : 0.0;
    }
  }
  matmul(scratch.hidden1, rule.at("w1"), scratch.hidden2);
  const Tensor& b1 = rule.at("b1");
  for (int64_t i = 0; i < n; ++i) {
    double* row = scratch.hidden2.data() + i * h;
    for (int64_t j = 0; j < h; ++j) {
      const double z = row[j] + b1[j];
      row[j] = z > 0.0 ? z : 0.0;
    }
  }
  matmul(scratch.hidden2, rule.at("w2"), heads);
  const Tensor& b2 = rule.at("b2");
  for (int64_t i = 0; i < n; ++i) {
    heads[i * 2] += b2[0];
    heads[i * 2 + 1] += b2[1];
  }
}

void rule_delta(const CeloParams& params, const Tensor& heads, const Tensor& p,
                Tensor& delta) {
  double norm = p.l2_norm();
  if (params.config.norm == NormKind::Rms) {
    norm /= std::sqrt(static_cast<double>(p.numel()));
  }
  const double nu = std::max(norm, kTensorNormFloor);
  ensure_shape(delta, p.shape());
  const double lam1 = params.config.lambda1;
  const double lam2 = params.config.lambda2;
  for (int64_t k = 0; k < p.numel(); ++k) {
    const double d = heads[k * 2];
    const double m = heads[k * 2 + 1];
    delta[k] = lam1 * d * std::exp(lam2 * m) * nu;
  }
}

}  // namespace

Tensor per_param_features(const CeloState& state, size_t tensor_index, const Tensor& p,
                          const Tensor& g) {
  Tensor features;
  fill_features(state, tensor_index, p, g, features);
  return features;
}

Tensor rule_step(const CeloParams& params, const Tensor& features, const Tensor& p) {
  CELO_CHECK(features.extent(1) == kFeatureCount, "feature width mismatch");
  CELO_CHECK(features.extent(0) == p.numel(), "feature rows must cover the tensor");
  Tensor heads;
  rule_forward(params, features, heads, t_scratch);
  Tensor delta;
  rule_delta(params, heads, p, delta);
  return delta;
}

Tensor build_scheduler_input(const CeloState& state, double loss) {
  CELO_CHECK(state.horizon >= 1, "horizon must be set");
  Tensor input({kSchedulerInputDim});
  int64_t i = 0;
  const double t = static_cast<double>(state.step);
  input[i++] = std::min(t / static_cast<double>(state.horizon), 1.0);
  for (double k : kProgressTimeScales) input[i++] = std::tanh(t / k);

  constexpr double eps = 1e-12;
  const double safe_loss = std::max(loss, eps);
  for (size_t d = 0; d < kLossEmaDecays.size(); ++d) {
    const double ema = state.loss_seeded ? state.loss_ema[d] : safe_loss;
    input[i++] = std::tanh(std::log(safe_loss / std::max(ema, eps)));
  }
  const double first = state.loss_seeded ? state.first_loss : safe_loss;
  input[i++] = std::tanh(std::log(safe_loss / std::max(first, eps)));
  return input;
}

double scheduler_step(const CeloParams& params, CeloState& state, const Tensor& input) {
  lstm_step(params.lstm_spec, params.scheduler, state.lstm_h, state.lstm_c, input);
  const Tensor& w = params.scheduler.at("proj_w");
  double o = params.scheduler.at("proj_b")[0];
  for (int64_t j = 0; j < w.numel(); ++j) o += w[j] * state.lstm_h[j];
  return scheduler_eta(params.config.form, params.config.alpha, o);
}

namespace {

// Adam step from the tracked accumulators (beta1 = 0.9, beta2 = 0.999),
// bias-corrected at the post-update step count.
Tensor adam_rule_delta(const CeloState& state, size_t tensor_index, double base_lr) {
  const TensorStats& ts = state.stats[tensor_index];
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(kMomentumDecays[0], t);
  const double c2 = 1.0 - std::pow(kSecondMomentDecay, t);
  constexpr double eps = 1e-8;
  Tensor delta(ts.second_moment.shape());
  for (int64_t k = 0; k < delta.numel(); ++k) {
    const double mhat = ts.momentum[0][k] / c1;
    const double vhat = ts.second_moment[k] / c2;
    delta[k] = base_lr * (mhat / (std::sqrt(vhat) + eps));
  }
  return delta;
}

}  // namespace

CeloStepInfo celo_update(const CeloParams& params, CeloVariant variant, ParamSet& theta,
                         const ParamSet& grads, double loss, CeloState& state,
                         std::vector<Tensor>* applied) {
  CELO_CHECK(theta.same_layout(grads), "theta/gradient layout mismatch");
  CeloStepInfo info;
  if (applied != nullptr) applied->clear();
  update_accumulators(state, grads, loss);
  if (state.diverged) {
    info.diverged = true;
    return info;
  }

  if (variant != CeloVariant::NoScheduler) {
    const Tensor sched_input = build_scheduler_input(state, loss);
    info.eta = scheduler_step(params, state, sched_input);
  } else {
    info.eta = 1.0;
  }
  if (!std::isfinite(info.eta)) {
    state.diverged = true;
    info.diverged = true;
    return info;
  }

  if (t_slot_scratch.size() < theta.size()) t_slot_scratch.resize(theta.size());
  for (size_t i = 0; i < theta.size(); ++i) {
    Tensor& p = theta.entry(i).tensor;
    RuleScratch& scratch = t_slot_scratch[i];
    Tensor delta;
    if (variant == CeloVariant::AdamRuleWithScheduler) {
      delta = adam_rule_delta(state, i, 1e-3);
    } else {
      fill_features(state, i, p, grads.entry(i).tensor, scratch.features);
      rule_forward(params, scratch.features, scratch.heads, scratch);
      rule_delta(params, scratch.heads, p, delta);
    }
    for (int64_t k = 0; k < p.numel(); ++k) {
      delta[k] = info.eta * delta[k];
      p[k] -= delta[k];
    }
    if (applied != nullptr) applied->push_back(std::move(delta));
  }
  if (!theta.all_finite()) {
    state.diverged = true;
    info.diverged = true;
  }
  return info;
}

}  // namespace celo
