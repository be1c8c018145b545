#pragma once

#include <cstdint>
#include <vector>

#include "auvox/tensor.hpp"

namespace auvox {

// Probabilities are clamped to [kProbEps, 1 - kProbEps] inside every log so a
// saturated output cannot produce an infinite loss.
inline constexpr double kProbEps = 1e-7;

template <typename S>
struct LossResult {
  double value = 0.0;     // scalar loss
  Tensor<S> dpred;        // d(loss)/d(predictions), same shape as predictions
  std::size_t counted = 0;  // entries that contributed (unmasked)
};

// Mean over unmasked (frame, AU) entries of
//   w(y) * -[y log p + (1-y) log(1-p)]
// with w(1) = positive_weight[au] and w(0) = 1. Pass an empty weight vector
// for uniform weighting. known[i] == 0 masks the entry out of both the loss
// and the gradient.
template <typename S>
LossResult<S> binary_cross_entropy(const Tensor<S>& pred, const Tensor<S>& targets,
                                   const Tensor<std::uint8_t>& known,
                                   const std::vector<double>& positive_weight = {});

// Mean over all (frame, AU) entries of -log p[class]; pred [B, A, 3],
// classes [B, A] with values in {0, 1, 2}.
template <typename S>
LossResult<S> categorical_cross_entropy(const Tensor<S>& pred,
                                        const Tensor<std::uint8_t>& classes);

}  // namespace auvox
