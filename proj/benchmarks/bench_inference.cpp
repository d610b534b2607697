// SPDX-License-Identifier: Apache-2.0
// Per-segment inference latency for each family, float vs 8-bit.
#include <benchmark/benchmark.h>

#include <random>

#include "edgeseizure/models.hpp"
#include "edgeseizure/quantizer.hpp"

namespace es = edgeseizure;

namespace {

es::ModelSpec spec_for(int family) {
  switch (family) {
    case 0: return es::build_dnn(256);
    case 1: return es::build_cnn(256);
    default: return es::build_lstm(256);
  }
}

std::vector<double> noise_segment(const es::ModelSpec& spec) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 50.0);
  std::vector<double> x(spec.channels * spec.samples);
  for (auto& v : x) v = g(rng);
  return x;
}

void BM_Infer(benchmark::State& state) {
  const auto spec = spec_for(static_cast<int>(state.range(0)));
  auto bundle = es::init_weights(spec, 3);
  if (state.range(1) != 0) bundle = es::quantize_model(bundle);
  const auto x = noise_segment(spec);
  es::MacCounter macs;
  es::InferenceWorkspace ws;
  ws.counter = &macs;
  es::infer_segment(bundle, x, ws);
  const auto per_segment = macs.conv + macs.fc + macs.lstm;
  ws.counter = nullptr;
  for (auto _ : state) {
    benchmark::DoNotOptimize(es::infer_segment(bundle, x, ws));
  }
  state.SetLabel(std::string(es::family_name(spec.family)) +
                 (state.range(1) != 0 ? " int8" : " float"));
  state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(per_segment),
                                               benchmark::Counter::kIsIterationInvariantRate);
}

}  // namespace

BENCHMARK(BM_Infer)
    ->ArgsProduct({{0, 1, 2}, {0, 1}})
    ->ArgNames({"family", "quantized"})
    ->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
