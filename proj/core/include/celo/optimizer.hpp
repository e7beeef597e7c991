#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "celo/nets.hpp"
#include "celo/rng.hpp"
#include "celo/tensor.hpp"

namespace celo {

// Multi-timescale momentum decays tracked per tensor.
inline constexpr std::array<double, 3> kMomentumDecays = {0.9, 0.99, 0.999};
// Second-moment decay.
inline constexpr double kSecondMomentDecay = 0.999;
// Loss EMA decays feeding the scheduler.
inline constexpr std::array<double, 4> kLossEmaDecays = {0.5, 0.9, 0.99, 0.999};
// Time-embedding scales for the per-parameter features.
inline constexpr std::array<double, 8> kFeatureTimeScales = {10,   30,   100,   300,
                                                             1000, 3000, 10000, 30000};
// Time-embedding scales for the scheduler progress features.
inline constexpr std::array<double, 3> kProgressTimeScales = {100, 1000, 10000};

// 11 statistics columns + shared time embeddings.
inline constexpr int64_t kStatFeatureCount = 11;
inline constexpr int64_t kFeatureCount =
    kStatFeatureCount + static_cast<int64_t>(kFeatureTimeScales.size());
// Progress (t/T + 3 embeddings) and loss (4 EMA ratios + ratio to L0).
inline constexpr int64_t kSchedulerInputDim =
    1 + static_cast<int64_t>(kProgressTimeScales.size()) +
    static_cast<int64_t>(kLossEmaDecays.size()) + 1;

inline constexpr double kFeatureEps = 1e-8;
inline constexpr double kTensorNormFloor = 1e-6;

enum class SchedulerForm { Linear, LinearClip, Exp };
enum class NormKind { L2, Rms };
enum class CeloVariant { Full, NoScheduler, AdamRuleWithScheduler };

SchedulerForm scheduler_form_from_name(const std::string& name);
CeloVariant celo_variant_from_name(const std::string& name);
std::string to_string(SchedulerForm form);
std::string to_string(CeloVariant variant);

// Functional form of the scheduler head applied to the projected LSTM
// output o_t.
double scheduler_eta(SchedulerForm form, double alpha, double o);

struct CeloConfig {
  int64_t rule_hidden = 32;
  int64_t lstm_hidden = 64;
  double alpha = 1.0;
  double lambda1 = 0.001;
  double lambda2 = 0.001;
  SchedulerForm form = SchedulerForm::Exp;
  NormKind norm = NormKind::L2;
};

// Learned-optimizer weights phi: the per-parameter MLP rule and the LSTM
// scheduler with its scalar projection.
struct CeloParams {
  CeloConfig config;
  NetSpec rule_spec;    // {features, 32, 32, 2}
  ParamSet rule;        // two heads per parameter: direction d, magnitude m
  LstmSpec lstm_spec;   // scheduler cell dims
  ParamSet scheduler;   // "wx", "wh", "b", plus "proj_w" {hidden}, "proj_b" {1}
};

// Rule hidden layers get fan-in Gaussian weights; the rule output head and
// the scheduler projection start at zero, so the initial optimizer is a
// no-op and the scheduler starts as the identity (eta = alpha).
CeloParams make_celo_params(const CeloConfig& config, const RngStream& rng);

// Per-tensor accumulators.
struct TensorStats {
  std::array<Tensor, 3> momentum;  // one per kMomentumDecays
  Tensor second_moment;
  Tensor afac_row;  // rank-2 tensors only
  Tensor afac_col;
};

struct CeloState {
  int64_t step = 0;
  int64_t horizon = 0;
  bool diverged = false;
  bool loss_seeded = false;
  double first_loss = 0.0;
  std::array<double, 4> loss_ema = {0, 0, 0, 0};
  std::vector<double> loss_window;  // most recent raw losses, capped
  Tensor lstm_h;
  Tensor lstm_c;
  std::vector<TensorStats> stats;  // aligned with the optimizee ParamSet order
};

inline constexpr size_t kLossWindowCap = 10;

// All accumulators zero, step 0, declared horizon stored.
CeloState init_state(const ParamSet& theta_like, int64_t horizon,
                     int64_t lstm_hidden = 64);

// Momentum/second-moment/Adafactor updates, loss EMAs, step increment.
// Non-finite gradients flag the state diverged and leave it unchanged.
void update_accumulators(CeloState& state, const ParamSet& grads, double loss);

// Feature rows for one tensor: {numel, kFeatureCount}. Statistics columns
// are rescaled to unit second moment over the tensor; time embeddings are
// appended as shared columns.
Tensor per_param_features(const CeloState& state, size_t tensor_index, const Tensor& p,
                          const Tensor& g);

// Rule-only update for one tensor (no scheduler scaling).
Tensor rule_step(const CeloParams& params, const Tensor& features, const Tensor& p);

// Progress and loss features, squashed to [-1, 1].
Tensor build_scheduler_input(const CeloState& state, double loss);

// Advances the LSTM state and returns eta_t.
double scheduler_step(const CeloParams& params, CeloState& state, const Tensor& input);

struct CeloStepInfo {
  double eta = 1.0;
  bool diverged = false;
};

// One full optimizer step: accumulators first, one global eta, then
// per-tensor updates theta <- theta - eta * rule(p). When `applied` is
// given it receives the exact per-tensor amounts subtracted.
CeloStepInfo celo_update(const CeloParams& params, CeloVariant variant, ParamSet& theta,
                         const ParamSet& grads, double loss, CeloState& state,
                         std::vector<Tensor>* applied = nullptr);

}  // namespace celo
