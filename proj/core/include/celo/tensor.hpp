#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace celo {

// Dense row-major tensor of 64-bit reals.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::initializer_list<int64_t> shape);

  static Tensor full(std::vector<int64_t> shape, double value);
  static Tensor from(std::vector<int64_t> shape, std::vector<double> values);

  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t extent(int dim) const { return shape_[static_cast<size_t>(dim)]; }
  int64_t numel() const { return static_cast<int64_t>(values_.size()); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& operator[](int64_t i) { return values_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return values_[static_cast<size_t>(i)]; }

  // Rank-2 access, row-major.
  double& at(int64_t row, int64_t col) {
    return values_[static_cast<size_t>(row * shape_[1] + col)];
  }
  double at(int64_t row, int64_t col) const {
    return values_[static_cast<size_t>(row * shape_[1] + col)];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double value);
  double l2_norm() const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && values_ == other.values_;
  }

 private:
  std::vector<int64_t> shape_;
  std::vector<double> values_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered collection of uniquely named tensors. Iteration order is
// insertion order, always.
class ParamSet {
 public:
  Tensor& add(std::string name, Tensor tensor);
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  size_t size() const { return entries_.size(); }
  NamedTensor& entry(size_t i) { return entries_[i]; }
  const NamedTensor& entry(size_t i) const { return entries_[i]; }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  int64_t total_params() const;
  bool all_finite() const;
  // Same names and shapes in the same order.
  bool same_layout(const ParamSet& other) const;

  bool operator==(const ParamSet& other) const;

 private:
  std::vector<NamedTensor> entries_;
};

// Concatenates all tensor values in entry order.
Tensor flatten(const ParamSet& params);
void unflatten_into(std::span<const double> flat, ParamSet& into);

void scale(ParamSet& params, double factor);
// y += a * x, layouts must match.
void axpy(double a, const ParamSet& x, ParamSet& y);

// out = a @ b for rank-2 tensors {n,k} x {k,m} -> {n,m}.
void matmul(const Tensor& a, const Tensor& b, Tensor& out);
// out = a^T @ b for {k,n} x {k,m} -> {n,m}.
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out);
// out = a @ b^T for {n,k} x {m,k} -> {n,m}.
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out);

}  // namespace celo
