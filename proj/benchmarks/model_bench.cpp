#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "rasc/codec.hpp"
#include "rasc/ops.hpp"
#include "rasc/rwkv.hpp"

namespace rasc {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = normal(rng);
  return Tensor::from(std::move(shape), std::move(v), Precision::kF32);
}

void BM_Wkv(benchmark::State& state) {
  const std::int64_t c = state.range(0), t = state.range(1);
  Tensor k = random_tensor({c, t}, 1), v = random_tensor({c, t}, 2);
  Tensor w = Tensor::full({c}, 0.5), u = Tensor::zeros({c});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(wkv(k, v, w, u));
  state.SetItemsProcessed(state.iterations() * c * t);
}
BENCHMARK(BM_Wkv)->Args({64, 100})->Args({192, 400});

void BM_Conv1d(benchmark::State& state) {
  const std::int64_t c = state.range(0), t = state.range(1);
  Tensor x = random_tensor({c, t}, 3);
  Tensor kernel = random_tensor({c, c, 7}, 4);
  Tensor bias = Tensor::zeros({c});
  ops::ConvOptions o;
  o.pad.left = 6;
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv1d(x, kernel, bias, o));
}
BENCHMARK(BM_Conv1d)->Args({64, 100})->Args({128, 400});

void BM_Compress(benchmark::State& state) {
  static const CodecModel model(ModelConfig::desk());
  static const Codec codec(model);
  AudioClip clip;
  for (int i = 0; i < kSampleRate; ++i) clip.samples.push_back(0.2f * std::sin(0.07f * i));
  for (auto _ : state) benchmark::DoNotOptimize(codec.compress(clip));
  state.SetLabel("1 s clip");
}
BENCHMARK(BM_Compress)->Unit(benchmark::kMillisecond);

void BM_Decompress(benchmark::State& state) {
  static const CodecModel model(ModelConfig::desk());
  static const Codec codec(model);
  AudioClip clip;
  for (int i = 0; i < kSampleRate; ++i) clip.samples.push_back(0.2f * std::sin(0.07f * i));
  const Container c = codec.compress(clip).container;
  for (auto _ : state) benchmark::DoNotOptimize(codec.decompress(c));
  state.SetLabel("1 s clip");
}
BENCHMARK(BM_Decompress)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace rasc
