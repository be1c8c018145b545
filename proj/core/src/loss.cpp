#include "auvox/loss.hpp"

#include <algorithm>
#include <cmath>

#include "auvox/error.hpp"

namespace auvox {

template <typename S>
LossResult<S> binary_cross_entropy(const Tensor<S>& pred, const Tensor<S>& targets,
                                   const Tensor<std::uint8_t>& known,
                                   const std::vector<double>& positive_weight) {
  if (pred.rank() != 2 || !pred.same_shape(targets) || pred.dims() != known.dims())
    throw ShapeMismatchError("binary_cross_entropy: pred/targets/known shapes differ");
  const std::size_t au_count = pred.dim(1);
  if (!positive_weight.empty() && positive_weight.size() != au_count)
    throw ShapeMismatchError("binary_cross_entropy: one positive weight per AU required");

  LossResult<S> out;
  out.dpred = Tensor<S>(pred.dims());
  std::size_t counted = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (known[i]) ++counted;
  out.counted = counted;
  if (counted == 0) return out;  // fully masked batch: zero loss, zero gradient

  const double inv_n = 1.0 / static_cast<double>(counted);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!known[i]) continue;
    const double y = static_cast<double>(targets[i]);
    const double p = std::clamp(static_cast<double>(pred[i]), kProbEps, 1.0 - kProbEps);
    const double w =
        (y > 0.5 && !positive_weight.empty()) ? positive_weight[i % au_count] : 1.0;
    total += w * -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
    out.dpred[i] = static_cast<S>(w * (-y / p + (1.0 - y) / (1.0 - p)) * inv_n);
  }
  out.value = total * inv_n;
  return out;
}

template <typename S>
LossResult<S> categorical_cross_entropy(const Tensor<S>& pred,
                                        const Tensor<std::uint8_t>& classes) {
  if (pred.rank() != 3 || pred.dim(2) != 3)
    throw ShapeMismatchError("categorical_cross_entropy: pred must be [B, A, 3]");
  if (classes.rank() != 2 || classes.dim(0) != pred.dim(0) || classes.dim(1) != pred.dim(1))
    throw ShapeMismatchError("categorical_cross_entropy: classes must be [B, A]");

  LossResult<S> out;
  out.dpred = Tensor<S>(pred.dims());
  const std::size_t n = classes.size();
  out.counted = n;
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t cls = classes[i];
    if (cls > 2) throw DataError("class index out of range");
    const double p = std::clamp(static_cast<double>(pred[i * 3 + cls]), kProbEps, 1.0 - kProbEps);
    total += -std::log(p);
    out.dpred[i * 3 + cls] = static_cast<S>(-inv_n / p);
  }
  out.value = total * inv_n;
  return out;
}

template LossResult<float> binary_cross_entropy(const Tensor<float>&, const Tensor<float>&,
                                                const Tensor<std::uint8_t>&,
                                                const std::vector<double>&);
template LossResult<double> binary_cross_entropy(const Tensor<double>&, const Tensor<double>&,
                                                 const Tensor<std::uint8_t>&,
                                                 const std::vector<double>&);
template LossResult<float> categorical_cross_entropy(const Tensor<float>&,
                                                     const Tensor<std::uint8_t>&);
template LossResult<double> categorical_cross_entropy(const Tensor<double>&,
                                                      const Tensor<std::uint8_t>&);

}  // namespace auvox
