#include "auvox/network.hpp"

#include <cstring>

#include "auvox/gradcheck.hpp"
#include "auvox/loss.hpp"
#include "auvox/rng.hpp"
#include "doctest.h"

using namespace auvox;

namespace {

Tensor<double> random_input(const ArchitectureDescriptor& d, std::size_t batch, Rng& rng) {
  Tensor<double> x({batch, d.input_c, d.input_c, d.input_c});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform01();
  return x;
}

}  // namespace

TEST_SUITE_BEGIN("network");

TEST_CASE("equal descriptor and seed give bit-identical parameters") {
  const auto desc = ArchitectureDescriptor::tiny(Variant::Binary);
  Network<float> a(desc, 42), b(desc, 42);
  auto pa = a.params(), pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    REQUIRE(pa[i].value->size() == pb[i].value->size());
    CHECK(std::memcmp(pa[i].value->data(), pb[i].value->data(),
                      pa[i].value->size() * sizeof(float)) == 0);
  }
  Network<float> c(desc, 43);
  bool any_diff = false;
  auto pc = c.params();
  for (std::size_t i = 0; i < pa.size() && !any_diff; ++i)
    any_diff = std::memcmp(pa[i].value->data(), pc[i].value->data(),
                           pa[i].value->size() * sizeof(float)) != 0;
  CHECK(any_diff);
}

TEST_CASE("binary default output layer covers 12 AUs and biases start at zero") {
  const auto desc = ArchitectureDescriptor::binary_default();
  Network<float> net(desc, 7);
  auto params = net.params();
  bool found_output = false;
  for (const auto& p : params) {
    if (p.name == "output.weight") {
      found_output = true;
      CHECK(p.value->dims() == std::vector<std::size_t>{12, 128});
    }
    if (p.name.ends_with(".bias"))
      for (std::size_t i = 0; i < p.value->size(); ++i) CHECK((*p.value)[i] == 0.0f);
  }
  CHECK(found_output);
}

TEST_CASE("zero-parameter binary network outputs 0.5 everywhere") {
  const auto desc = ArchitectureDescriptor::tiny(Variant::Binary);
  Network<float> net(desc, 1);
  for (auto& p : net.params()) p.value->zero();
  Tensor<float> x({2, desc.input_c, desc.input_c, desc.input_c});  // all-zero grid
  Tensor<float> pred = net.forward(x);
  for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred[i] == 0.5f);
}

TEST_CASE("binary outputs live strictly inside (0,1)") {
  Rng rng(8);
  const auto desc = ArchitectureDescriptor::tiny(Variant::Binary);
  Network<double> net(desc, 9);
  Tensor<double> pred = net.forward(random_input(desc, 4, rng));
  CHECK(pred.dims() == std::vector<std::size_t>{4, desc.au_count});
  for (std::size_t i = 0; i < pred.size(); ++i) {
    CHECK(pred[i] > 0.0);
    CHECK(pred[i] < 1.0);
  }
}

TEST_CASE("3-class heads emit simplex vectors per AU") {
  Rng rng(10);
  const auto desc = ArchitectureDescriptor::tiny(Variant::ThreeClass);
  Network<double> net(desc, 11);
  Tensor<double> pred = net.forward(random_input(desc, 3, rng));
  REQUIRE(pred.dims() == std::vector<std::size_t>{3, desc.au_count, 3});
  for (std::size_t r = 0; r < 3 * desc.au_count; ++r) {
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) {
      CHECK(pred[r * 3 + j] > 0.0);
      sum += pred[r * 3 + j];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("backward requires a cached forward") {
  const auto desc = ArchitectureDescriptor::tiny(Variant::Binary);
  Network<double> net(desc, 1);
  Tensor<double> dpred({1, desc.au_count});
  CHECK_THROWS_AS(net.backward(dpred), MissingCacheError);

  Rng rng(2);
  net.forward(random_input(desc, 1, rng), false);  // uncached
  CHECK_THROWS_AS(net.backward(dpred), MissingCacheError);
}

TEST_CASE("input shape is validated") {
  const auto desc = ArchitectureDescriptor::tiny(Variant::Binary);
  Network<double> net(desc, 1);
  Tensor<double> bad({1, desc.input_c, desc.input_c, desc.input_c + 1});
  CHECK_THROWS_AS(net.forward(bad), ShapeMismatchError);
}

TEST_CASE("zero loss gradient backpropagates to zero parameter gradients") {
  Rng rng(3);
  const auto desc = ArchitectureDescriptor::tiny(Variant::Binary);
  Network<double> net(desc, 5);
  net.zero_grad();
  net.forward(random_input(desc, 2, rng), true);
  Tensor<double> dpred({2, desc.au_count});
  net.backward(dpred);
  for (auto& p : net.params())
    for (std::size_t i = 0; i < p.grad->size(); ++i) CHECK((*p.grad)[i] == 0.0);
}

TEST_CASE("duplicating every sample leaves mean gradients unchanged") {
  Rng rng(4);
  const auto desc = ArchitectureDescriptor::tiny(Variant::Binary);
  Tensor<double> x2 = random_input(desc, 2, rng);
  Tensor<double> x4({4, desc.input_c, desc.input_c, desc.input_c});
  const std::size_t frame = desc.input_c * desc.input_c * desc.input_c;
  for (int rep = 0; rep < 2; ++rep)
    std::memcpy(x4.data() + rep * 2 * frame, x2.data(), 2 * frame * sizeof(double));

  Tensor<double> y2({2, desc.au_count}), y4({4, desc.au_count});
  Tensor<std::uint8_t> k2({2, desc.au_count}), k4({4, desc.au_count});
  for (std::size_t i = 0; i < y2.size(); ++i) {
    y2[i] = (i % 3 == 0) ? 1.0 : 0.0;
    k2[i] = 1;
  }
  for (int rep = 0; rep < 2; ++rep)
    for (std::size_t i = 0; i < y2.size(); ++i) {
      y4[rep * y2.size() + i] = y2[i];
      k4[rep * y2.size() + i] = 1;
    }

  Network<double> net(desc, 6);
  net.zero_grad();
  auto r2 = binary_cross_entropy(net.forward(x2, true), y2, k2);
  net.backward(r2.dpred);
  std::vector<std::vector<double>> grads2;
  for (auto& p : net.params())
    grads2.emplace_back(p.grad->data(), p.grad->data() + p.grad->size());

  net.zero_grad();
  auto r4 = binary_cross_entropy(net.forward(x4, true), y4, k4);
  net.backward(r4.dpred);
  auto params = net.params();
  for (std::size_t pi = 0; pi < params.size(); ++pi)
    for (std::size_t i = 0; i < params[pi].grad->size(); ++i)
      CHECK((*params[pi].grad)[i] ==
            doctest::Approx(grads2[pi][i]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("full tiny architectures pass the gradient check") {
  for (auto variant : {Variant::Binary, Variant::ThreeClass}) {
    const auto report = gradient_check_network(ArchitectureDescriptor::tiny(variant), 17);
    CAPTURE(report.worst_param);
    CHECK(report.max_rel_err < 1e-4);
  }
}

TEST_CASE("descriptor validation rejects malformed shapes") {
  ArchitectureDescriptor d = ArchitectureDescriptor::tiny(Variant::Binary);
  d.conv_filters.clear();
  CHECK_THROWS_AS(d.validate(), InvalidDescriptorError);

  d = ArchitectureDescriptor::tiny(Variant::Binary);
  d.kernel = 4;
  CHECK_THROWS_AS(d.validate(), InvalidDescriptorError);

  d = ArchitectureDescriptor::tiny(Variant::Binary);
  d.pool_after = {5};
  CHECK_THROWS_AS(d.validate(), InvalidDescriptorError);

  d = ArchitectureDescriptor::tiny(Variant::Binary);
  d.input_c = 2;
  d.pool_after = {0, 1};
  CHECK_THROWS_AS(d.validate(), InvalidDescriptorError);
}

TEST_CASE("descriptor json round-trips") {
  const auto desc = ArchitectureDescriptor::three_class_default();
  CHECK(descriptor_from_json(descriptor_to_json(desc)) == desc);
  CHECK_THROWS_AS(descriptor_from_json("{}"), InvalidDescriptorError);
  CHECK_THROWS_AS(descriptor_from_json("not json"), InvalidDescriptorError);
}

TEST_SUITE_END();
