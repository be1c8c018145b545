#pragma once

#include <cstdint>
#include <vector>

#include "auvox/layers.hpp"
#include "auvox/tensor.hpp"

namespace auvox {

struct AdamHyperparams {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam:
//   t <- t + 1
//   m <- b1 m + (1 - b1) g        v <- b2 v + (1 - b2) g^2
//   theta <- theta - alpha * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
// Moment tensors are allocated on the first step and must keep matching the
// parameter list passed to every subsequent step.
template <typename S>
class AdamState {
 public:
  explicit AdamState(AdamHyperparams hp = {}) : hp_(hp) {}

  void step(const std::vector<ParamRef<S>>& params);

  std::uint64_t t() const { return t_; }
  const AdamHyperparams& hyperparams() const { return hp_; }

 private:
  AdamHyperparams hp_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<S>> m_, v_;
};

extern template class AdamState<float>;
extern template class AdamState<double>;

}  // namespace auvox
