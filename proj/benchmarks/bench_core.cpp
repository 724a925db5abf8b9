// Copyright 2026 The RDenseCNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>

#include "rdense/analyzer.hpp"
#include "rdense/network.hpp"

namespace rdense {
namespace {

template <typename T>
Tensor<T> uniform(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

// Args: channels in, channels out, kernel, extent. Batch 16.
template <typename T>
void BM_Conv2dForward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto cout = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto hw = static_cast<std::size_t>(state.range(3));
  const Var<T> x = Var<T>::leaf(uniform<T>(Shape{16, cin, hw, hw}, 1));
  const Var<T> w = Var<T>::leaf(uniform<T>(Shape{cout, cin, k, k}, 2));
  for (auto _ : state) {
    Tape<T> tape;
    benchmark::DoNotOptimize(ops::conv2d(tape, x, w, 1, k / 2).value().ptr());
  }
  state.counters["MAC/s"] = benchmark::Counter(
      static_cast<double>(16 * cout * cin * k * k * hw * hw), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK_TEMPLATE(BM_Conv2dForward, float)->Args({48, 48, 1, 32})->Args({48, 12, 3, 32})->Args({240, 48, 1, 8});
BENCHMARK_TEMPLATE(BM_Conv2dForward, double)->Args({48, 48, 1, 32})->Args({48, 12, 3, 32});

template <typename T>
void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Var<T> w = Var<T>::leaf(uniform<T>(Shape{12, c, 3, 3}, 2), true);
  const Tensor<T> input = uniform<T>(Shape{16, c, 16, 16}, 1);
  for (auto _ : state) {
    Tape<T> tape;
    const Var<T> x = Var<T>::leaf(input, true);
    tape.backward(ops::sum(tape, ops::conv2d(tape, x, w, 1, 1)));
    benchmark::DoNotOptimize(x.grad().ptr());
  }
}
BENCHMARK_TEMPLATE(BM_Conv2dBackward, float)->Arg(48);

ArchSpec tiny() {
  ArchSpec s;
  s.name = "tiny";
  s.growth_rate = 4;
  s.layers_per_block = 2;
  s.num_blocks = 2;
  s.input_channels = 1;
  s.input_height = s.input_width = 28;
  return s;
}

// Forward pass of a full network. Arg 0: 0 = tiny at 1x28x28, 1 = rdense-12-100.
template <typename T>
void BM_NetworkForward(benchmark::State& state) {
  const ArchSpec spec = state.range(0) == 0 ? tiny() : *parse_preset("rdense-12-100");
  const auto batch = static_cast<std::size_t>(state.range(1));
  Network<T> net = Network<T>::build(spec, 0);
  const Tensor<T> x =
      uniform<T>(Shape{batch, spec.input_channels, spec.input_height, spec.input_width}, 3);
  for (auto _ : state) {
    Tape<T> tape;
    benchmark::DoNotOptimize(net.forward(tape, x, Mode::kEval).value().ptr());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
}
BENCHMARK_TEMPLATE(BM_NetworkForward, float)->Args({0, 128})->Args({1, 8})->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_NetworkForward, double)->Args({0, 128})->Unit(benchmark::kMillisecond);

// One training step (forward, backward) of the tiny network on a batch of 128.
void BM_TinyTrainStep(benchmark::State& state) {
  Network<float> net = Network<float>::build(tiny(), 0);
  const Tensor<float> x = uniform<float>(Shape{128, 1, 28, 28}, 4);
  std::vector<int> labels(128);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 10);
  for (auto _ : state) {
    Tape<float> tape;
    net.params().zero_grad();
    tape.backward(ops::softmax_cross_entropy(tape, net.forward(tape, x, Mode::kTrain),
                                             std::span<const int>(labels)));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 128));
}
BENCHMARK(BM_TinyTrainStep)->Unit(benchmark::kMillisecond);

void BM_AnalyzeAllPresets(benchmark::State& state) {
  const auto names = preset_names();
  for (auto _ : state) {
    std::uint64_t total = 0;
    for (const std::string& n : names) total += count_flops(*parse_preset(n));
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_AnalyzeAllPresets);

}  // namespace
}  // namespace rdense
BENCHMARK_MAIN();
