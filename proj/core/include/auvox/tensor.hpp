#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "auvox/error.hpp"

namespace auvox {

// Dense row-major tensor. Scalar is float for training, double for
// gradient checking.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims)
      : dims_(std::move(dims)), data_(count(dims_), Scalar(0)) {}

  Tensor(std::initializer_list<std::size_t> dims)
      : Tensor(std::vector<std::size_t>(dims)) {}

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }

  Scalar& at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  const Scalar& at(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }

  void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(Scalar(0)); }

  // Same element count, new shape; data untouched.
  void reshape(std::vector<std::size_t> dims) {
    if (count(dims) != data_.size())
      throw ShapeMismatchError("reshape: element count mismatch");
    dims_ = std::move(dims);
  }

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

  bool all_finite() const {
    for (Scalar v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  static std::size_t count(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<Scalar> data_;
};

}  // namespace auvox
