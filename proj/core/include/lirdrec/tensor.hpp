#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lirdrec/errors.hpp"
#include "lirdrec/rng.hpp"

namespace lirdrec {

// Dense row-major matrix. Scalar type is float in training and double in
// tests and oracles; vectors are represented as 1xN or Nx1.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  static Tensor full(size_t rows, size_t cols, T v) {
    Tensor t(rows, cols);
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor xavier(size_t rows, size_t cols, Rng& rng) {
    Tensor t(rows, cols);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (auto& v : t.data_) v = static_cast<T>(rng.uniform_range(-bound, bound));
    return t;
  }

  static Tensor randn(size_t rows, size_t cols, Rng& rng, double scale = 1.0) {
    Tensor t(rows, cols);
    for (auto& v : t.data_) v = static_cast<T>(rng.normal() * scale);
    return t;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  T operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  T& at(size_t i) { return data_[i]; }
  T at(size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (const T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const T v : data_) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s);
  }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& x) {
  Tensor<To> y(x.rows(), x.cols());
  for (size_t i = 0; i < x.size(); ++i) y.at(i) = static_cast<To>(x.at(i));
  return y;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw ContractError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.at(i)) - static_cast<double>(b.at(i))));
  return m;
}

}  // namespace lirdrec
