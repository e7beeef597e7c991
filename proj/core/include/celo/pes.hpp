#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "celo/optimizer.hpp"
#include "celo/rng.hpp"
#include "celo/task.hpp"
#include "celo/tensor.hpp"

namespace celo {

enum class StageId { UpdateRule, Scheduler };
std::string to_string(StageId stage);

// The stage's trainable slice of phi; masks are disjoint and together
// cover all of phi.
Tensor trainable_flat(const CeloParams& phi, StageId stage);
void set_trainable(CeloParams& phi, StageId stage, std::span<const double> values);
int64_t trainable_size(const CeloParams& phi, StageId stage);
CeloVariant stage_variant(StageId stage);

struct PesConfig {
  double sigma = 0.01;       // perturbation std
  int64_t truncation = 50;   // K
  int64_t pairs = 8;         // N
  int64_t unroll_min = 100;  // horizon range, sampled log-uniformly
  int64_t unroll_max = 2000;
  int64_t meta_iters = 2000;
  double meta_lr = 1e-4;
  // When >= 0, the meta learning rate follows a cosine decay from meta_lr
  // to meta_lr_min over the stage; < 0 keeps it constant.
  double meta_lr_min = -1.0;
  double weight_decay = 0.0;
  double grad_clip = 1.0;
  int workers = 1;
};

// The learning rate used at a given meta-iteration under the configured
// schedule; a pure function of (config, meta_iter), so resumes see the
// identical sequence.
double meta_lr_at(const PesConfig& config, int64_t meta_iter);

// Persistent antithetic particle pair. Both trajectories share the task,
// tau, horizon, and batch streams; they differ only through the signed
// perturbation of phi.
struct ParticlePair {
  int64_t pair_index = 0;
  int64_t reset_count = 0;
  bool initialized = false;
  int64_t task_index = -1;
  double tau = 1.0;
  int64_t horizon = 0;
  int64_t steps = 0;  // inner steps since the last reset
  ParamSet theta_pos;
  ParamSet theta_neg;
  CeloState state_pos;
  CeloState state_neg;
  Tensor xi;  // accumulated perturbation over trainable coords
};

// Fresh task, tau, theta0/tau, log-uniform horizon; xi and inner state
// zeroed. Streams derive from (pair_index, reset_count).
void pes_reset(ParticlePair& pair, const std::vector<TaskInstance>& suite,
               const RngStream& root, const PesConfig& config, int64_t trainable_count,
               int64_t lstm_hidden);

struct TruncationRun {
  double mean_loss = 0.0;
  bool diverged = false;
};

// Runs one trajectory of a pair for the truncation window under the given
// perturbed trainable coordinates.
using InnerRunner =
    std::function<TruncationRun(std::span<const double> trainable, ParticlePair& pair,
                                bool positive)>;

struct PairOutcome {
  double loss_pos = 0.0;
  double loss_neg = 0.0;
  bool diverged = false;
  Tensor contribution;
};

// Estimator core shared by meta-training and analytic probes: draw
// eps ~ N(0, sigma^2 I), evaluate both signs with identical streams,
// accumulate xi, and emit xi * (L+ - L-) / (2 sigma^2) per pair.
std::vector<PairOutcome> pes_truncation_core(std::vector<ParticlePair>& pairs,
                                             const Tensor& phi_trainable, double sigma,
                                             const RngStream& root, int64_t meta_iter,
                                             int workers, const InnerRunner& runner);

struct PesEstimate {
  Tensor grad;  // average contribution over valid pairs
  double mean_meta_loss = 0.0;
  int64_t valid_pairs = 0;
  int64_t diverged_pairs = 0;
  int64_t resets = 0;
};

struct MetaState {
  StageId stage = StageId::UpdateRule;
  int64_t meta_iter = 0;
  int64_t adam_t = 0;
  Tensor adam_m;  // AdamW moments over trainable coords
  Tensor adam_v;
  std::vector<ParticlePair> pairs;
};

MetaState make_meta_state(const CeloParams& phi, StageId stage, const PesConfig& config);

// One PES truncation across all pairs of the real inner problem; pairs at
// their horizon (or diverged) are reset afterwards.
PesEstimate pes_truncation(const CeloParams& phi, MetaState& meta,
                           const std::vector<TaskInstance>& suite, const PesConfig& config,
                           const RngStream& root);

struct AdamwOutcome {
  double grad_norm = 0.0;
  bool clipped = false;
  bool skipped = false;
};

// AdamW on the trainable coordinates; frozen coordinates are untouched.
// The estimate is clipped to global norm `grad_clip` first; a non-finite
// estimate skips the step.
AdamwOutcome adamw_meta_step(MetaState& meta, CeloParams& phi, const Tensor& grad,
                             const PesConfig& config);

struct TrainLogRow {
  int64_t meta_iter = 0;
  double mean_meta_loss = 0.0;
  double grad_norm = 0.0;
  bool clipped = false;
};

// Loops pes_truncation + adamw_meta_step until meta.meta_iter reaches
// config.meta_iters. Safe to call again after loading a checkpoint with a
// larger target; the log rows for the newly run iterations are returned.
std::vector<TrainLogRow> run_stage(CeloParams& phi, MetaState& meta,
                                   const std::vector<TaskInstance>& suite,
                                   const PesConfig& config, const RngStream& root);

// CSV: meta_iter,mean_meta_loss,grad_norm,clipped_flag.
void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows,
                         bool append = false);

}  // namespace celo
