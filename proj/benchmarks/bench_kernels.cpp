// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "edgeseizure/data.hpp"
#include "edgeseizure/qtensor.hpp"
#include "edgeseizure/wmv.hpp"

namespace es = edgeseizure;

namespace {

void BM_MacDot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::int32_t> w(-128, 127), a(-4096, 4096);
  std::vector<std::int32_t> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = w(rng);
    y[i] = a(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(es::mac_dot(x, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MacDot)->Arg(64)->Arg(640)->Arg(2304);

void BM_LineLength(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> g(-2000, 2000);
  std::vector<std::int16_t> x(static_cast<std::size_t>(state.range(0)));
  for (auto& v : x) v = static_cast<std::int16_t>(g(rng));
  for (auto _ : state) benchmark::DoNotOptimize(es::line_length(std::span<const std::int16_t>(x)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LineLength)->Arg(256)->Arg(256 * 3600);

void BM_WmvPush(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> lab(0, 2);
  std::vector<es::Label> preds(4096);
  for (auto& p : preds) p = static_cast<es::Label>(lab(rng));
  const es::WmvParams params;
  es::WmvState s;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(es::wmv_push(s, preds[i++ & 4095], params));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_WmvPush);

}  // namespace
