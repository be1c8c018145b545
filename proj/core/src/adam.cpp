#include "auvox/adam.hpp"

#include <cmath>

namespace auvox {

template <typename S>
void AdamState<S>::step(const std::vector<ParamRef<S>>& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value->dims());
      v_.emplace_back(p.value->dims());
    }
  }
  if (m_.size() != params.size())
    throw ShapeMismatchError("AdamState: parameter count changed between steps");

  ++t_;
  const S b1 = static_cast<S>(hp_.beta1);
  const S b2 = static_cast<S>(hp_.beta2);
  const S alpha = static_cast<S>(hp_.alpha);
  const S eps = static_cast<S>(hp_.eps);
  const S bc1 = static_cast<S>(1.0 - std::pow(hp_.beta1, static_cast<double>(t_)));
  const S bc2 = static_cast<S>(1.0 - std::pow(hp_.beta2, static_cast<double>(t_)));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<S>& theta = *params[i].value;
    const Tensor<S>& g = *params[i].grad;
    Tensor<S>& m = m_[i];
    Tensor<S>& v = v_[i];
    if (!theta.same_shape(m) || !theta.same_shape(g))
      throw ShapeMismatchError("AdamState: shape mismatch for '" + params[i].name + "'");
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (S(1) - b1) * g[j];
      v[j] = b2 * v[j] + (S(1) - b2) * g[j] * g[j];
      const S mhat = m[j] / bc1;
      const S vhat = v[j] / bc2;
      theta[j] -= alpha * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template class AdamState<float>;
template class AdamState<double>;

}  // namespace auvox
