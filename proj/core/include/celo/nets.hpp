#pragma once

#include <cstdint>
#include <vector>

#include "celo/rng.hpp"
#include "celo/tensor.hpp"

namespace celo {

enum class Act { ReLU, Tanh, Identity };

// Fully-connected network: widths [d0, d1, ..., dL], one activation per
// layer. Layer i maps widths[i] -> widths[i+1]; parameters are named
// "w<i>" ({in, out}) and "b<i>" ({out}).
struct NetSpec {
  std::vector<int64_t> widths;
  std::vector<Act> acts;

  int64_t layers() const { return static_cast<int64_t>(widths.size()) - 1; }
  int64_t input_dim() const { return widths.front(); }
  int64_t output_dim() const { return widths.back(); }
};

NetSpec make_mlp_spec(std::vector<int64_t> widths, Act hidden_act);

// Weights ~ N(0, 1/fan_in), biases zero. Deterministic under (spec, stream).
ParamSet init_params(const NetSpec& spec, const RngStream& rng);

struct MlpCache {
  // acts[0] is the input batch; acts[i] the output of layer i-1 after its
  // activation. pre[i] holds layer i pre-activations.
  std::vector<Tensor> acts;
  std::vector<Tensor> pre;
};

// Input is a {batch, d0} tensor; returns {batch, dL}. Pass a cache to keep
// what backward needs.
Tensor mlp_forward(const NetSpec& spec, const ParamSet& params, const Tensor& input,
                   MlpCache* cache = nullptr);

struct MlpGrads {
  ParamSet params;
  Tensor input;
};

// Exact reverse-mode gradients of the forward map for d(out_grad . output).
MlpGrads mlp_backward(const NetSpec& spec, const ParamSet& params, const MlpCache& cache,
                      const Tensor& out_grad);

// LSTM cell with gates packed in rows [input, forget, candidate, output];
// parameters "wx" {4h, in}, "wh" {4h, h}, "b" {4h}.
struct LstmSpec {
  int64_t input_dim = 0;
  int64_t hidden_dim = 0;
};

ParamSet init_lstm(const LstmSpec& spec, const RngStream& rng);

// Advances (h, c) in place using input x ({in}); returns nothing, the cell
// output is h.
void lstm_step(const LstmSpec& spec, const ParamSet& params, Tensor& h, Tensor& c,
               const Tensor& x);

}  // namespace celo
