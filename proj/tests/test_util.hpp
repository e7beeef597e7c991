#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "celo/tensor.hpp"

namespace celo::testing {

// Central finite differences over every coordinate of a ParamSet:
// g_i ~= (f(x + h e_i) - f(x - h e_i)) / 2h. Independent of any analytic
// gradient path; used as the oracle for backward implementations.
inline ParamSet finite_difference_grads(const ParamSet& params,
                                        const std::function<double(const ParamSet&)>& f,
                                        double h = 1e-6) {
  ParamSet grads;
  for (const auto& e : params) grads.add(e.name, Tensor(e.tensor.shape()));
  ParamSet probe = params;
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& pt = probe.entry(i).tensor;
    Tensor& gt = grads.entry(i).tensor;
    for (int64_t k = 0; k < pt.numel(); ++k) {
      const double saved = pt[k];
      pt[k] = saved + h;
      const double up = f(probe);
      pt[k] = saved - h;
      const double down = f(probe);
      pt[k] = saved;
      gt[k] = (up - down) / (2.0 * h);
    }
  }
  return grads;
}

// max |a-b| / max(1, |a|, |b|) over all coordinates.
inline double max_rel_error(const ParamSet& a, const ParamSet& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const Tensor& ta = a.entry(i).tensor;
    const Tensor& tb = b.entry(i).tensor;
    for (int64_t k = 0; k < ta.numel(); ++k) {
      const double denom = std::max({1.0, std::abs(ta[k]), std::abs(tb[k])});
      worst = std::max(worst, std::abs(ta[k] - tb[k]) / denom);
    }
  }
  return worst;
}

inline bool bit_equal(double a, double b) {
  uint64_t ba, bb;
  std::memcpy(&ba, &a, sizeof(ba));
  std::memcpy(&bb, &b, sizeof(bb));
  return ba == bb;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (int64_t k = 0; k < a.numel(); ++k) {
    if (!bit_equal(a[k], b[k])) return false;
  }
  return true;
}

inline bool bit_equal(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a.entry(i).name != b.entry(i).name) return false;
    if (!bit_equal(a.entry(i).tensor, b.entry(i).tensor)) return false;
  }
  return true;
}

}  // namespace celo::testing
