#include "auvox/adam.hpp"

#include <cmath>

#include "doctest.h"

using namespace auvox;

namespace {

struct ScalarParam {
  Tensor<double> theta{std::vector<std::size_t>{1}};
  Tensor<double> grad{std::vector<std::size_t>{1}};
  std::vector<ParamRef<double>> refs() { return {{"theta", &theta, &grad}}; }
};

}  // namespace

TEST_SUITE_BEGIN("adam");

TEST_CASE("zero gradient leaves parameters untouched") {
  ScalarParam p;
  p.theta[0] = 1.0;
  p.grad[0] = 0.0;
  AdamState<double> adam;
  adam.step(p.refs());
  CHECK(p.theta[0] == 1.0);
  CHECK(adam.t() == 1);
}

TEST_CASE("single step matches the hand-evaluated update") {
  ScalarParam p;
  p.theta[0] = 1.0;
  p.grad[0] = 1.0;
  AdamState<double> adam;
  adam.step(p.refs());
  // m=0.1, v=0.001, mhat=1, vhat=1 -> theta = 1 - 0.001/(1 + 1e-8)
  CHECK(p.theta[0] == doctest::Approx(1.0 - 0.001 / (1.0 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("two constant-gradient steps match an independent trace to 1e-12") {
  // Independent evaluation of the update rule, written out step by step the
  // way one would in a spreadsheet.
  const double alpha = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 1.0;
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    theta -= alpha * mhat / (std::sqrt(vhat) + eps);
  }

  ScalarParam p;
  p.theta[0] = 1.0;
  AdamState<double> adam;
  for (int t = 0; t < 2; ++t) {
    p.grad[0] = g;
    adam.step(p.refs());
  }
  CHECK(std::abs(p.theta[0] - theta) < 1e-12);
  CHECK(adam.t() == 2);
}

TEST_CASE("direction follows the gradient sign") {
  ScalarParam p;
  p.theta[0] = 0.0;
  p.grad[0] = -2.5;
  AdamState<double> adam;
  adam.step(p.refs());
  CHECK(p.theta[0] > 0.0);
}

TEST_CASE("moment shapes must match parameters across steps") {
  ScalarParam p;
  AdamState<double> adam;
  adam.step(p.refs());

  Tensor<double> bigger({2});
  Tensor<double> bigger_grad({2});
  std::vector<ParamRef<double>> refs = {{"theta", &bigger, &bigger_grad}};
  CHECK_THROWS_AS(adam.step(refs), ShapeMismatchError);

  ScalarParam extra;
  std::vector<ParamRef<double>> two = p.refs();
  auto more = extra.refs();
  two.insert(two.end(), more.begin(), more.end());
  CHECK_THROWS_AS(adam.step(two), ShapeMismatchError);
}

TEST_SUITE_END();
