#pragma once

#include <cmath>

#include "auvox/layers.hpp"
#include "auvox/rng.hpp"

namespace auvox::testing {

// Worst relative error of a layer's vector-Jacobian product against central
// finite differences of J = sum(dy . forward(x)), over the input gradient and
// every parameter gradient. The denominator floor keeps difference-quotient
// noise on near-zero gradients from registering as error.
inline double layer_vjp_max_rel_err(Layer<double>& layer, const Tensor<double>& x,
                                    std::uint64_t seed, double h = 1e-5) {
  Rng rng(seed);
  Tensor<double> y0 = layer.forward(x, false);
  Tensor<double> dy(y0.dims());
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = rng.uniform(-1.0, 1.0);

  auto objective = [&](const Tensor<double>& input) {
    Tensor<double> y = layer.forward(input, false);
    double j = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) j += dy[i] * y[i];
    return j;
  };

  layer.zero_grad();
  layer.forward(x, true);
  Tensor<double> dx = layer.backward(dy);

  double worst = 0.0;
  auto update = [&](double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };

  Tensor<double> xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = xp[i];
    xp[i] = saved + h;
    const double jp = objective(xp);
    xp[i] = saved - h;
    const double jm = objective(xp);
    xp[i] = saved;
    update(dx[i], (jp - jm) / (2 * h));
  }

  std::vector<ParamRef<double>> params;
  layer.collect_params("p", params);
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value->size(); ++i) {
      const double saved = (*p.value)[i];
      (*p.value)[i] = saved + h;
      const double jp = objective(x);
      (*p.value)[i] = saved - h;
      const double jm = objective(x);
      (*p.value)[i] = saved;
      update((*p.grad)[i], (jp - jm) / (2 * h));
    }
  }
  return worst;
}

}  // namespace auvox::testing
