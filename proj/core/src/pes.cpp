#include "celo/pes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "celo/error.hpp"
#include "celo/format.hpp"
#include "celo/parallel.hpp"

namespace celo {

std::string to_string(StageId stage) {
  return stage == StageId::UpdateRule ? "rule" : "scheduler";
}

namespace {

const ParamSet& stage_params(const CeloParams& phi, StageId stage) {
  return stage == StageId::UpdateRule ? phi.rule : phi.scheduler;
}

ParamSet& stage_params(CeloParams& phi, StageId stage) {
  return stage == StageId::UpdateRule ? phi.rule : phi.scheduler;
}

}  // namespace

Tensor trainable_flat(const CeloParams& phi, StageId stage) {
  return flatten(stage_params(phi, stage));
}

void set_trainable(CeloParams& phi, StageId stage, std::span<const double> values) {
  unflatten_into(values, stage_params(phi, stage));
}

int64_t trainable_size(const CeloParams& phi, StageId stage) {
  return stage_params(phi, stage).total_params();
}

CeloVariant stage_variant(StageId stage) {
  return stage == StageId::UpdateRule ? CeloVariant::NoScheduler : CeloVariant::Full;
}

void pes_reset(ParticlePair& pair, const std::vector<TaskInstance>& suite,
               const RngStream& root, const PesConfig& config, int64_t trainable_count,
               int64_t lstm_hidden) {
  CELO_CHECK(!suite.empty(), "cannot reset against an empty task suite");
  const RngStream reset_rng = root.child("pair_reset", static_cast<uint64_t>(pair.pair_index))
                                  .child("reset", static_cast<uint64_t>(pair.reset_count));
  RngStream task_rng = reset_rng.child("task");
  pair.task_index =
      static_cast<int64_t>(task_rng.uniform_index(static_cast<uint64_t>(suite.size())));
  RngStream tau_rng = reset_rng.child("tau");
  pair.tau = sample_tau(tau_rng);

  RngStream horizon_rng = reset_rng.child("horizon");
  const double lo = std::log(static_cast<double>(config.unroll_min));
  const double hi = std::log(static_cast<double>(config.unroll_max));
  const double u = lo + (hi - lo) * horizon_rng.next_double();
  pair.horizon = std::clamp<int64_t>(std::llround(std::exp(u)), config.unroll_min,
                                     config.unroll_max);

  const TaskInstance& task = suite[static_cast<size_t>(pair.task_index)];
  ParamSet theta0 = init_params(task.net, reset_rng.child("theta0"));
  theta0 = augment_init(theta0, pair.tau);
  pair.theta_pos = theta0;
  pair.theta_neg = std::move(theta0);
  pair.state_pos = init_state(pair.theta_pos, pair.horizon, lstm_hidden);
  pair.state_neg = init_state(pair.theta_neg, pair.horizon, lstm_hidden);
  pair.xi = Tensor({std::max<int64_t>(trainable_count, 1)});
  pair.steps = 0;
  pair.initialized = true;
}

std::vector<PairOutcome> pes_truncation_core(std::vector<ParticlePair>& pairs,
                                             const Tensor& phi_trainable, double sigma,
                                             const RngStream& root, int64_t meta_iter,
                                             int workers, const InnerRunner& runner) {
  CELO_CHECK(sigma > 0.0, "sigma must be positive");
  const int64_t dim = phi_trainable.numel();
  std::vector<PairOutcome> outcomes(pairs.size());
  parallel_for(static_cast<int64_t>(pairs.size()), workers, [&](int64_t i) {
    ParticlePair& pair = pairs[static_cast<size_t>(i)];
    PairOutcome& out = outcomes[static_cast<size_t>(i)];
    RngStream eps_rng = root.child("pes_eps", static_cast<uint64_t>(pair.pair_index))
                            .child("iter", static_cast<uint64_t>(meta_iter));
    Tensor eps({dim});
    for (double& v : eps.values()) v = sigma * eps_rng.next_gaussian();

    std::vector<double> plus(static_cast<size_t>(dim)), minus(static_cast<size_t>(dim));
    for (int64_t k = 0; k < dim; ++k) {
      plus[static_cast<size_t>(k)] = phi_trainable[k] + eps[k];
      minus[static_cast<size_t>(k)] = phi_trainable[k] - eps[k];
    }
    const TruncationRun run_pos = runner(plus, pair, true);
    const TruncationRun run_neg = runner(minus, pair, false);
    out.loss_pos = run_pos.mean_loss;
    out.loss_neg = run_neg.mean_loss;
    out.diverged = run_pos.diverged || run_neg.diverged;

    CELO_CHECK(pair.xi.numel() == dim, "xi size mismatch");
    for (int64_t k = 0; k < dim; ++k) pair.xi[k] += eps[k];
    if (!out.diverged) {
      out.contribution = Tensor({dim});
      const double scale = (out.loss_pos - out.loss_neg) / (2.0 * sigma * sigma);
      for (int64_t k = 0; k < dim; ++k) out.contribution[k] = pair.xi[k] * scale;
    }
  });
  return outcomes;
}

MetaState make_meta_state(const CeloParams& phi, StageId stage, const PesConfig& config) {
  CELO_CHECK(config.pairs >= 1, "need at least one particle pair");
  MetaState meta;
  meta.stage = stage;
  const int64_t dim = trainable_size(phi, stage);
  meta.adam_m = Tensor({dim});
  meta.adam_v = Tensor({dim});
  meta.pairs.resize(static_cast<size_t>(config.pairs));
  for (size_t i = 0; i < meta.pairs.size(); ++i) {
    meta.pairs[i].pair_index = static_cast<int64_t>(i);
  }
  return meta;
}

PesEstimate pes_truncation(const CeloParams& phi, MetaState& meta,
                           const std::vector<TaskInstance>& suite, const PesConfig& config,
                           const RngStream& root) {
  const StageId stage = meta.stage;
  const CeloVariant variant = stage_variant(stage);
  const int64_t dim = trainable_size(phi, stage);

  PesEstimate estimate;
  estimate.grad = Tensor({dim});

  for (ParticlePair& pair : meta.pairs) {
    if (!pair.initialized) {
      pes_reset(pair, suite, root, config, dim, phi.config.lstm_hidden);
      ++estimate.resets;
    }
  }

  const InnerRunner runner = [&](std::span<const double> trainable, ParticlePair& pair,
                                 bool positive) -> TruncationRun {
    // Deep copy into a per-thread scratch; vector assignment reuses the
    // existing allocations once the layout has been seen.
    thread_local CeloParams local;
    local = phi;
    set_trainable(local, stage, trainable);
    const TaskInstance task =
        with_tau(suite[static_cast<size_t>(pair.task_index)], pair.tau);
    ParamSet& theta = positive ? pair.theta_pos : pair.theta_neg;
    CeloState& state = positive ? pair.state_pos : pair.state_neg;
    const RngStream batch_root =
        root.child("batch", static_cast<uint64_t>(pair.pair_index))
            .child("reset", static_cast<uint64_t>(pair.reset_count));
    const int64_t window =
        std::min<int64_t>(config.truncation, pair.horizon - pair.steps);

    TruncationRun run;
    double acc = 0.0;
    for (int64_t k = 0; k < window; ++k) {
      const int64_t t = pair.steps + k;
      const Batch batch = sample_batch(task, batch_root.child("step", static_cast<uint64_t>(t)));
      const LossGrad lg = loss_and_grad(task, theta, batch);
      if (lg.diverged) {
        run.diverged = true;
        return run;
      }
      acc += lg.loss;
      const CeloStepInfo info = celo_update(local, variant, theta, lg.grads, lg.loss, state);
      if (info.diverged) {
        run.diverged = true;
        return run;
      }
    }
    run.mean_loss = acc / static_cast<double>(std::max<int64_t>(window, 1));
    return run;
  };

  const Tensor phi_flat = trainable_flat(phi, stage);
  const std::vector<PairOutcome> outcomes = pes_truncation_core(
      meta.pairs, phi_flat, config.sigma, root, meta.meta_iter, config.workers, runner);

  double loss_acc = 0.0;
  for (size_t i = 0; i < meta.pairs.size(); ++i) {
    ParticlePair& pair = meta.pairs[i];
    const PairOutcome& out = outcomes[i];
    if (out.diverged) {
      ++estimate.diverged_pairs;
      pair.initialized = false;  // dropped; reset below
    } else {
      ++estimate.valid_pairs;
      loss_acc += 0.5 * (out.loss_pos + out.loss_neg);
      for (int64_t k = 0; k < dim; ++k) estimate.grad[k] += out.contribution[k];
      pair.steps += std::min<int64_t>(config.truncation, pair.horizon - pair.steps);
      if (pair.steps >= pair.horizon) pair.initialized = false;
    }
    if (!pair.initialized) {
      pair.reset_count += 1;
      pes_reset(pair, suite, root, config, dim, phi.config.lstm_hidden);
      ++estimate.resets;
    }
  }
  if (estimate.valid_pairs > 0) {
    const double inv = 1.0 / static_cast<double>(estimate.valid_pairs);
    for (int64_t k = 0; k < dim; ++k) estimate.grad[k] *= inv;
    estimate.mean_meta_loss = loss_acc / static_cast<double>(estimate.valid_pairs);
  } else {
    estimate.mean_meta_loss = std::numeric_limits<double>::quiet_NaN();
  }
  return estimate;
}

double meta_lr_at(const PesConfig& config, int64_t meta_iter) {
  if (config.meta_lr_min < 0.0 || config.meta_iters <= 1) return config.meta_lr;
  const double frac = static_cast<double>(meta_iter) /
                      static_cast<double>(config.meta_iters - 1);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(frac, 1.0)));
  return config.meta_lr_min + (config.meta_lr - config.meta_lr_min) * cosine;
}

AdamwOutcome adamw_meta_step(MetaState& meta, CeloParams& phi, const Tensor& grad,
                             const PesConfig& config) {
  AdamwOutcome outcome;
  if (!grad.all_finite()) {
    outcome.skipped = true;
    return outcome;
  }
  Tensor g = grad;
  outcome.grad_norm = g.l2_norm();
  if (outcome.grad_norm > config.grad_clip) {
    const double s = config.grad_clip / outcome.grad_norm;
    for (double& v : g.values()) v *= s;
    outcome.clipped = true;
  }

  Tensor trainable = trainable_flat(phi, meta.stage);
  CELO_CHECK(g.numel() == trainable.numel(), "meta gradient size mismatch");
  meta.adam_t += 1;
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(meta.adam_t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(meta.adam_t));
  for (int64_t k = 0; k < g.numel(); ++k) {
    meta.adam_m[k] = beta1 * meta.adam_m[k] + (1.0 - beta1) * g[k];
    meta.adam_v[k] = beta2 * meta.adam_v[k] + (1.0 - beta2) * g[k] * g[k];
    const double mhat = meta.adam_m[k] / c1;
    const double vhat = meta.adam_v[k] / c2;
    trainable[k] -= config.meta_lr * (mhat / (std::sqrt(vhat) + eps) +
                                      config.weight_decay * trainable[k]);
  }
  set_trainable(phi, meta.stage, trainable.values());
  return outcome;
}

std::vector<TrainLogRow> run_stage(CeloParams& phi, MetaState& meta,
                                   const std::vector<TaskInstance>& suite,
                                   const PesConfig& config, const RngStream& root) {
  CELO_CHECK(!suite.empty(), "task suite is empty");
  const RngStream stage_root = root.child(meta.stage == StageId::UpdateRule
                                              ? "stage_rule"
                                              : "stage_scheduler");
  std::vector<TrainLogRow> log;
  while (meta.meta_iter < config.meta_iters) {
    const PesEstimate estimate = pes_truncation(phi, meta, suite, config, stage_root);
    TrainLogRow row;
    row.meta_iter = meta.meta_iter;
    row.mean_meta_loss = estimate.mean_meta_loss;
    if (estimate.valid_pairs > 0) {
      PesConfig step_config = config;
      step_config.meta_lr = meta_lr_at(config, meta.meta_iter);
      const AdamwOutcome outcome = adamw_meta_step(meta, phi, estimate.grad, step_config);
      row.grad_norm = outcome.grad_norm;
      row.clipped = outcome.clipped;
    }
    log.push_back(row);
    meta.meta_iter += 1;
  }
  return log;
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows,
                         bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::out);
  CELO_CHECK(static_cast<bool>(out), "cannot open " + path);
  if (!append) out << "meta_iter,mean_meta_loss,grad_norm,clipped_flag\n";
  for (const TrainLogRow& row : rows) {
    out << row.meta_iter << ',' << format_double(row.mean_meta_loss) << ','
        << format_double(row.grad_norm) << ',' << (row.clipped ? 1 : 0) << '\n';
  }
  CELO_CHECK(static_cast<bool>(out), "write failed: " + path);
}

}  // namespace celo
