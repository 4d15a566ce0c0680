#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace metaparse {

#ifdef METAPARSE_FLOAT32
using real = float;
#else
using real = double;
#endif

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced by a forward op or a loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major tensor. Every op in this library works on rank <= 2;
/// rank-1 tensors behave as a single row and rank-0 as a 1x1 matrix.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, real fill = real(0))
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape product " +
                       std::to_string(element_count(shape_)));
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, real fill = real(0)) {
    return Tensor({rows, cols}, fill);
  }

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<real> values) {
    return Tensor({rows, cols}, std::vector<real>(values));
  }

  static Tensor scalar(real v) { return Tensor({1, 1}, std::vector<real>{v}); }

  static Tensor row(std::initializer_list<real> values) {
    return Tensor({1, values.size()}, std::vector<real>(values));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const {
    if (shape_.size() < 2) return 1;
    return shape_[0];
  }
  std::size_t cols() const {
    if (shape_.empty()) return 1;
    return shape_.back();
  }

  real& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  real operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }

  std::span<real> data() { return data_; }
  std::span<const real> data() const { return data_; }
  std::vector<real>& values() { return data_; }
  const std::vector<real>& values() const { return data_; }

  real item() const {
    if (data_.size() != 1) throw ShapeError("item() on tensor with " + std::to_string(size()) + " elements");
    return data_[0];
  }

  bool same_shape(const Tensor& o) const { return rows() == o.rows() && cols() == o.cols() && size() == o.size(); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](real v) { return std::isfinite(v); });
  }

  void fill(real v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor zeros_like() const { return Tensor(shape_, real(0)); }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> shape_{};
  std::vector<real> data_{};
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

}  // namespace metaparse
