#include "celo/tensor.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "celo/error.hpp"

namespace celo {

namespace detail {

[[noreturn]] void throw_check_failed(const char* expr, const std::string& msg) {
  throw Error(msg + " (check failed: " + expr + ")");
}

}  // namespace detail

static int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    CELO_CHECK(e > 0, "tensor extents must be positive");
    n *= e;
  }
  return n;
}

Tensor::Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
  values_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(std::initializer_list<int64_t> shape)
    : Tensor(std::vector<int64_t>(shape)) {}

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from(std::vector<int64_t> shape, std::vector<double> values) {
  Tensor t;
  t.shape_ = std::move(shape);
  CELO_CHECK(static_cast<int64_t>(values.size()) == shape_numel(t.shape_),
             "value count must equal product of extents");
  t.values_ = std::move(values);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double value) {
  for (double& v : values_) v = value;
}

double Tensor::l2_norm() const {
  double acc = 0.0;
  for (double v : values_) acc += v * v;
  return std::sqrt(acc);
}

Tensor& ParamSet::add(std::string name, Tensor tensor) {
  CELO_CHECK(!contains(name), "duplicate parameter name: " + name);
  entries_.push_back({std::move(name), std::move(tensor)});
  return entries_.back().tensor;
}

Tensor& ParamSet::at(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw Error("no parameter named " + std::string(name));
}

const Tensor& ParamSet::at(std::string_view name) const {
  return const_cast<ParamSet*>(this)->at(name);
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

int64_t ParamSet::total_params() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& e : entries_) {
    if (!e.tensor.all_finite()) return false;
  }
  return true;
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (entries_[i].tensor.shape() != other.entries_[i].tensor.shape()) return false;
  }
  return true;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!(entries_[i].tensor == other.entries_[i].tensor)) return false;
  }
  return true;
}

Tensor flatten(const ParamSet& params) {
  Tensor flat({std::max<int64_t>(params.total_params(), 1)});
  if (params.total_params() == 0) return Tensor({1});
  int64_t off = 0;
  for (const auto& e : params) {
    for (double v : e.tensor.values()) flat[off++] = v;
  }
  return flat;
}

void unflatten_into(std::span<const double> flat, ParamSet& into) {
  CELO_CHECK(static_cast<int64_t>(flat.size()) == into.total_params(),
             "flat size must match parameter count");
  size_t off = 0;
  for (auto& e : into) {
    for (double& v : e.tensor.values()) v = flat[off++];
  }
}

void scale(ParamSet& params, double factor) {
  for (auto& e : params) {
    for (double& v : e.tensor.values()) v *= factor;
  }
}

void axpy(double a, const ParamSet& x, ParamSet& y) {
  CELO_CHECK(x.same_layout(y), "axpy layout mismatch");
  for (size_t i = 0; i < x.size(); ++i) {
    const Tensor& xs = x.entry(i).tensor;
    Tensor& ys = y.entry(i).tensor;
    for (int64_t k = 0; k < xs.numel(); ++k) ys[k] += a * xs[k];
  }
}

void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  CELO_CHECK(a.rank() == 2 && b.rank() == 2, "matmul expects rank-2 tensors");
  const int64_t n = a.extent(0), k = a.extent(1), m = b.extent(1);
  CELO_CHECK(b.extent(0) == k, "matmul inner extents mismatch");
  if (out.shape() != std::vector<int64_t>{n, m}) out = Tensor({n, m});
  double* __restrict__ o = out.data();
  const double* __restrict__ pa = a.data();
  const double* __restrict__ pb = b.data();
  // Column tiles small enough that the accumulators live in registers
  // across the whole k loop.
  constexpr int64_t kTile = 32;
  for (int64_t i = 0; i < n; ++i) {
    const double* arow = pa + i * k;
    for (int64_t j0 = 0; j0 < m; j0 += kTile) {
      const int64_t jn = std::min(kTile, m - j0);
      double acc[kTile] = {0};
      if (jn == kTile) {
        for (int64_t kk = 0; kk < k; ++kk) {
          const double av = arow[kk];
          const double* brow = pb + kk * m + j0;
          for (int64_t j = 0; j < kTile; ++j) acc[j] += av * brow[j];
        }
      } else {
        for (int64_t kk = 0; kk < k; ++kk) {
          const double av = arow[kk];
          const double* brow = pb + kk * m + j0;
          for (int64_t j = 0; j < jn; ++j) acc[j] += av * brow[j];
        }
      }
      double* orow = o + i * m + j0;
      for (int64_t j = 0; j < jn; ++j) orow[j] = acc[j];
    }
  }
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out) {
  CELO_CHECK(a.rank() == 2 && b.rank() == 2, "matmul_tn expects rank-2 tensors");
  const int64_t k = a.extent(0), n = a.extent(1), m = b.extent(1);
  CELO_CHECK(b.extent(0) == k, "matmul_tn inner extents mismatch");
  if (out.shape() != std::vector<int64_t>{n, m}) out = Tensor({n, m});
  double* __restrict__ o = out.data();
  const double* __restrict__ pa = a.data();
  const double* __restrict__ pb = b.data();
  std::fill(o, o + n * m, 0.0);
  for (int64_t kk = 0; kk < k; ++kk) {
    const double* arow = pa + kk * n;
    const double* brow = pb + kk * m;
    for (int64_t i = 0; i < n; ++i) {
      const double av = arow[i];
      double* orow = o + i * m;
      for (int64_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out) {
  CELO_CHECK(a.rank() == 2 && b.rank() == 2, "matmul_nt expects rank-2 tensors");
  const int64_t n = a.extent(0), k = a.extent(1), m = b.extent(0);
  CELO_CHECK(b.extent(1) == k, "matmul_nt inner extents mismatch");
  if (out.shape() != std::vector<int64_t>{n, m}) out = Tensor({n, m});
  double* __restrict__ o = out.data();
  const double* __restrict__ pa = a.data();
  const double* __restrict__ pb = b.data();
  for (int64_t i = 0; i < n; ++i) {
    const double* arow = pa + i * k;
    for (int64_t j = 0; j < m; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      o[i * m + j] = acc;
    }
  }
}

}  // namespace celo
