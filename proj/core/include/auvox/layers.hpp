#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "auvox/rng.hpp"
#include "auvox/tensor.hpp"

namespace auvox {

template <typename S>
struct ParamRef {
  std::string name;
  Tensor<S>* value;
  Tensor<S>* grad;
};

// A layer owns its parameters and, between a cached forward and the matching
// backward, the activations it needs. backward consumes the cache.
template <typename S>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor<S> forward(const Tensor<S>& x, bool cache) = 0;
  // dy has the shape of this layer's output; returns d(loss)/d(input) and
  // accumulates parameter gradients. Throws MissingCacheError without a
  // cached forward.
  virtual Tensor<S> backward(const Tensor<S>& dy) = 0;

  virtual void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {}
  virtual void init_params(Rng& rng) {}
  virtual void zero_grad() {}
};

// 2D convolution, stride 1, zero "same" padding, odd kernel.
// weight [out_c, in_c, k, k], bias [out_c]; input [B, in_c, H, W].
template <typename S>
class Conv2d : public Layer<S> {
 public:
  Conv2d(std::size_t in_c, std::size_t out_c, std::size_t k);

  Tensor<S> forward(const Tensor<S>& x, bool cache) override;
  Tensor<S> backward(const Tensor<S>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) override;
  void init_params(Rng& rng) override;
  void zero_grad() override;

 private:
  void im2col(const S* x, std::size_t h, std::size_t w, S* col) const;

  std::size_t in_c_, out_c_, k_;
  Tensor<S> weight_, bias_, dweight_, dbias_;
  Tensor<S> x_cache_;
  bool has_cache_ = false;
};

// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
template <typename S>
class MaxPool2 : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool cache) override;
  Tensor<S> backward(const Tensor<S>& dy) override;

 private:
  std::vector<std::size_t> x_dims_;
  std::vector<std::uint32_t> argmax_;  // flat input index per output cell
  bool has_cache_ = false;
};

// Fully connected: weight [out, in], bias [out]; input [B, in].
template <typename S>
class Dense : public Layer<S> {
 public:
  Dense(std::size_t in, std::size_t out);

  Tensor<S> forward(const Tensor<S>& x, bool cache) override;
  Tensor<S> backward(const Tensor<S>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) override;
  void init_params(Rng& rng) override;
  void zero_grad() override;

 private:
  std::size_t in_, out_;
  Tensor<S> weight_, bias_, dweight_, dbias_;
  Tensor<S> x_cache_;
  bool has_cache_ = false;
};

template <typename S>
class Relu : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool cache) override;
  Tensor<S> backward(const Tensor<S>& dy) override;

 private:
  Tensor<S> y_cache_;
  bool has_cache_ = false;
};

template <typename S>
class Sigmoid : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool cache) override;
  Tensor<S> backward(const Tensor<S>& dy) override;

 private:
  Tensor<S> y_cache_;
  bool has_cache_ = false;
};

// Softmax over the last dimension.
template <typename S>
class Softmax : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool cache) override;
  Tensor<S> backward(const Tensor<S>& dy) override;

 private:
  Tensor<S> y_cache_;
  bool has_cache_ = false;
};

// [B, C, H, W] -> [B, C*H*W]. Data is already contiguous; only dims change.
template <typename S>
class Flatten : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool cache) override;
  Tensor<S> backward(const Tensor<S>& dy) override;

 private:
  std::vector<std::size_t> x_dims_;
  bool has_cache_ = false;
};

// Glorot-style uniform bound for weight init.
double uniform_init_bound(std::size_t fan_in, std::size_t fan_out);

}  // namespace auvox
