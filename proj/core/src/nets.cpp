#include "celo/nets.hpp"

#include <cmath>
#include <string>

#include "celo/error.hpp"

namespace celo {

namespace {

void apply_act(Act act, Tensor& t) {
  switch (act) {
    case Act::ReLU:
      for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Act::Tanh:
      for (double& v : t.values()) v = std::tanh(v);
      break;
    case Act::Identity:
      break;
  }
}

// dz = dy * act'(z), evaluated from pre-activation z and post-activation y.
void apply_act_grad(Act act, const Tensor& pre, const Tensor& post, Tensor& grad) {
  switch (act) {
    case Act::ReLU:
      for (int64_t i = 0; i < grad.numel(); ++i) {
        if (pre[i] <= 0.0) grad[i] = 0.0;
      }
      break;
    case Act::Tanh:
      for (int64_t i = 0; i < grad.numel(); ++i) {
        grad[i] *= 1.0 - post[i] * post[i];
      }
      break;
    case Act::Identity:
      break;
  }
}

void add_bias_rows(Tensor& batch, const Tensor& bias) {
  const int64_t n = batch.extent(0), m = batch.extent(1);
  for (int64_t i = 0; i < n; ++i) {
    double* row = batch.data() + i * m;
    for (int64_t j = 0; j < m; ++j) row[j] += bias[j];
  }
}

void validate(const NetSpec& spec) {
  CELO_CHECK(spec.widths.size() >= 2, "net needs at least one layer");
  CELO_CHECK(spec.acts.size() == spec.widths.size() - 1,
             "one activation per layer required");
  for (int64_t w : spec.widths) CELO_CHECK(w > 0, "layer widths must be positive");
}

}  // namespace

NetSpec make_mlp_spec(std::vector<int64_t> widths, Act hidden_act) {
  NetSpec spec;
  spec.widths = std::move(widths);
  spec.acts.assign(spec.widths.size() - 1, hidden_act);
  spec.acts.back() = Act::Identity;
  return spec;
}

ParamSet init_params(const NetSpec& spec, const RngStream& rng) {
  validate(spec);
  ParamSet params;
  for (int64_t l = 0; l < spec.layers(); ++l) {
    const int64_t fan_in = spec.widths[static_cast<size_t>(l)];
    const int64_t fan_out = spec.widths[static_cast<size_t>(l) + 1];
    Tensor w({fan_in, fan_out});
    RngStream layer_rng = rng.child("init_w", static_cast<uint64_t>(l));
    const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w.values()) v = stddev * layer_rng.next_gaussian();
    params.add("w" + std::to_string(l), std::move(w));
    params.add("b" + std::to_string(l), Tensor({fan_out}));
  }
  return params;
}

Tensor mlp_forward(const NetSpec& spec, const ParamSet& params, const Tensor& input,
                   MlpCache* cache) {
  validate(spec);
  CELO_CHECK(input.rank() == 2, "mlp_forward expects a {batch, features} tensor");
  CELO_CHECK(input.extent(1) == spec.input_dim(), "input width mismatch");
  if (cache != nullptr) {
    cache->acts.clear();
    cache->pre.clear();
    cache->acts.push_back(input);
  }
  Tensor cur = input;
  Tensor z;
  for (int64_t l = 0; l < spec.layers(); ++l) {
    const Tensor& w = params.at("w" + std::to_string(l));
    const Tensor& b = params.at("b" + std::to_string(l));
    matmul(cur, w, z);
    add_bias_rows(z, b);
    if (cache != nullptr) cache->pre.push_back(z);
    apply_act(spec.acts[static_cast<size_t>(l)], z);
    cur = z;
    if (cache != nullptr) cache->acts.push_back(cur);
  }
  return cur;
}

MlpGrads mlp_backward(const NetSpec& spec, const ParamSet& params, const MlpCache& cache,
                      const Tensor& out_grad) {
  validate(spec);
  CELO_CHECK(static_cast<int64_t>(cache.pre.size()) == spec.layers(),
             "cache does not match spec");
  CELO_CHECK(out_grad.same_shape(cache.acts.back()), "output grad shape mismatch");

  MlpGrads grads;
  for (int64_t l = 0; l < spec.layers(); ++l) {
    grads.params.add("w" + std::to_string(l),
                     Tensor(params.at("w" + std::to_string(l)).shape()));
    grads.params.add("b" + std::to_string(l),
                     Tensor(params.at("b" + std::to_string(l)).shape()));
  }

  Tensor delta = out_grad;
  for (int64_t l = spec.layers() - 1; l >= 0; --l) {
    apply_act_grad(spec.acts[static_cast<size_t>(l)], cache.pre[static_cast<size_t>(l)],
                   cache.acts[static_cast<size_t>(l) + 1], delta);
    // dW = x^T delta, db = column sums of delta.
    matmul_tn(cache.acts[static_cast<size_t>(l)], delta,
              grads.params.at("w" + std::to_string(l)));
    Tensor& db = grads.params.at("b" + std::to_string(l));
    const int64_t n = delta.extent(0), m = delta.extent(1);
    for (int64_t i = 0; i < n; ++i) {
      const double* row = delta.data() + i * m;
      for (int64_t j = 0; j < m; ++j) db[j] += row[j];
    }
    Tensor next;
    matmul_nt(delta, params.at("w" + std::to_string(l)), next);
    delta = std::move(next);
  }
  grads.input = std::move(delta);
  return grads;
}

ParamSet init_lstm(const LstmSpec& spec, const RngStream& rng) {
  CELO_CHECK(spec.input_dim > 0 && spec.hidden_dim > 0, "lstm dims must be positive");
  ParamSet params;
  const int64_t rows = 4 * spec.hidden_dim;
  Tensor wx({rows, spec.input_dim});
  Tensor wh({rows, spec.hidden_dim});
  RngStream rx = rng.child("lstm_wx");
  RngStream rh = rng.child("lstm_wh");
  const double sx = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
  const double sh = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
  for (double& v : wx.values()) v = sx * rx.next_gaussian();
  for (double& v : wh.values()) v = sh * rh.next_gaussian();
  params.add("wx", std::move(wx));
  params.add("wh", std::move(wh));
  params.add("b", Tensor({rows}));
  return params;
}

void lstm_step(const LstmSpec& spec, const ParamSet& params, Tensor& h, Tensor& c,
               const Tensor& x) {
  const int64_t hd = spec.hidden_dim;
  CELO_CHECK(x.numel() == spec.input_dim, "lstm input width mismatch");
  CELO_CHECK(h.numel() == hd && c.numel() == hd, "lstm state size mismatch");
  const Tensor& wx = params.at("wx");
  const Tensor& wh = params.at("wh");
  const Tensor& b = params.at("b");

  Tensor z({4 * hd});
  for (int64_t r = 0; r < 4 * hd; ++r) {
    double acc = b[r];
    const double* wxr = wx.data() + r * spec.input_dim;
    for (int64_t j = 0; j < spec.input_dim; ++j) acc += wxr[j] * x[j];
    const double* whr = wh.data() + r * hd;
    for (int64_t j = 0; j < hd; ++j) acc += whr[j] * h[j];
    z[r] = acc;
  }
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (int64_t j = 0; j < hd; ++j) {
    const double gi = sigmoid(z[j]);
    const double gf = sigmoid(z[hd + j]);
    const double gc = std::tanh(z[2 * hd + j]);
    const double go = sigmoid(z[3 * hd + j]);
    c[j] = gf * c[j] + gi * gc;
    h[j] = go * std::tanh(c[j]);
  }
}

}  // namespace celo
