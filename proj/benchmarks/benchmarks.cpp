#include <benchmark/benchmark.h>

#include "auvox/experiments.hpp"
#include "auvox/loss.hpp"
#include "auvox/synthgen.hpp"
#include "auvox/voxelizer.hpp"

namespace {

using namespace auvox;

LandmarkSet sample_frame(std::uint64_t seed) {
  Rng rng(seed);
  LandmarkSet set;
  set.frame_id = "bench";
  for (int i = 0; i < 83; ++i)
    set.points.push_back({rng.uniform(-80, 80), rng.uniform(-100, 100), rng.uniform(0, 60)});
  return set;
}

void BM_EncodeFrame(benchmark::State& state) {
  const LandmarkSet frame = sample_frame(1);
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(encode_frame(frame, c));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncodeFrame)->Arg(12)->Arg(24)->Arg(48);

void BM_ConvForward(benchmark::State& state) {
  Rng rng(2);
  Conv2d<float> conv(24, 8, 3);
  conv.init_params(rng);
  Tensor<float> x({8, 24, 24, 24});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform01() < 0.05 ? 1.0f : 0.0f;
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x, false));
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ConvForward);

void BM_ConvForwardBackward(benchmark::State& state) {
  Rng rng(3);
  Conv2d<float> conv(24, 8, 3);
  conv.init_params(rng);
  Tensor<float> x({8, 24, 24, 24});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform01() < 0.05 ? 1.0f : 0.0f;
  for (auto _ : state) {
    conv.zero_grad();
    Tensor<float> y = conv.forward(x, true);
    benchmark::DoNotOptimize(conv.backward(y));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ConvForwardBackward);

void BM_NetworkForward(benchmark::State& state) {
  ArchitectureDescriptor desc;
  desc.conv_filters = {8, 8, 16, 16};
  desc.dense = {64, 32};
  Network<float> net(desc, 4);
  Rng rng(5);
  Tensor<float> x({16, 24, 24, 24});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform01() < 0.05 ? 1.0f : 0.0f;
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, false));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_NetworkForward);

void BM_TrainStep(benchmark::State& state) {
  ArchitectureDescriptor desc;
  desc.conv_filters = {8, 8, 16, 16};
  desc.dense = {64, 32};
  Network<float> net(desc, 6);
  AdamState<float> adam;
  Rng rng(7);
  Tensor<float> x({16, 24, 24, 24});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform01() < 0.05 ? 1.0f : 0.0f;
  Tensor<float> y({16, 12});
  Tensor<std::uint8_t> known({16, 12});
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.uniform01() < 0.3 ? 1.0f : 0.0f;
    known[i] = 1;
  }
  for (auto _ : state) {
    net.zero_grad();
    Tensor<float> pred = net.forward(x, true);
    auto res = binary_cross_entropy(pred, y, known);
    net.backward(res.dpred);
    adam.step(net.params());
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_TrainStep);

void BM_SynthGenerate(benchmark::State& state) {
  SynthSpec spec;
  spec.subjects = 4;
  spec.frames_per_subject = 25;
  spec.sigma = 0.02;
  for (auto _ : state) {
    spec.seed++;
    benchmark::DoNotOptimize(generate_dataset(spec));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_SynthGenerate);

}  // namespace

BENCHMARK_MAIN();
