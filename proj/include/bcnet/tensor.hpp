#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "bcnet/errors.hpp"

namespace bcnet {

using Dims = std::vector<std::size_t>;

std::string format_dims(const Dims& dims);
std::size_t element_count(const Dims& dims);

// Dense rank-1..4 array, row-major with the last dimension contiguous.
// Rank-4 image tensors are laid out [batch, height, width, channel].
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : dims_{1}, data_(1, T{}) {}

  explicit BasicTensor(Dims dims) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_.assign(element_count(dims_), T{});
  }

  BasicTensor(Dims dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != element_count(dims_)) {
      throw ShapeError("tensor " + format_dims(dims_) + " needs " +
                       std::to_string(element_count(dims_)) + " values, got " +
                       std::to_string(data_.size()));
    }
  }

  BasicTensor(Dims dims, std::initializer_list<T> values)
      : BasicTensor(std::move(dims), std::vector<T>(values)) {}

  static BasicTensor filled(Dims dims, T value) {
    BasicTensor t(std::move(dims));
    for (auto& x : t.data_) x = value;
    return t;
  }

  const Dims& dims() const { return dims_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }

  T& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
    return data_[((b * dims_[1] + y) * dims_[2] + x) * dims_[3] + c];
  }
  const T& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const {
    return data_[((b * dims_[1] + y) * dims_[2] + x) * dims_[3] + c];
  }

  std::vector<T> release() && { return std::move(data_); }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  static void check_dims(const Dims& dims) {
    if (dims.empty() || dims.size() > 4) {
      throw ShapeError("tensor rank must be 1..4, got " + std::to_string(dims.size()));
    }
    for (auto d : dims) {
      if (d == 0) throw ShapeError("tensor dims must be positive: " + format_dims(dims));
    }
  }

  Dims dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Plain GEMM on raw row-major buffers: c[m,n] = a[m,k] * b[k,n].
// Every output element is accumulated in double.
void gemm(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n);
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n);

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// Row-wise softmax with max subtraction. Throws NumericError on non-finite input.
template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Dims dims);

template <typename T>
BasicTensor<T> reshape(BasicTensor<T>&& x, Dims dims);

template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& x) {
  std::vector<To> out(x.values().begin(), x.values().end());
  return BasicTensor<To>(x.dims(), std::move(out));
}

}  // namespace bcnet
