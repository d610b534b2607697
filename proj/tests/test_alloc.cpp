// SPDX-License-Identifier: Apache-2.0
// Counts heap allocations to check that inference reuses its workspace.
#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <new>
#include <random>

#include "edgeseizure/quantizer.hpp"

namespace {
std::atomic<std::size_t> g_allocations{0};
}

void* operator new(std::size_t n) {
  ++g_allocations;
  if (void* p = std::malloc(n ? n : 1)) return p;
  throw std::bad_alloc();
}
void* operator new[](std::size_t n) { return ::operator new(n); }
void operator delete(void* p) noexcept { std::free(p); }
void operator delete[](void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t) noexcept { std::free(p); }

namespace es = edgeseizure;

namespace {

std::vector<double> random_input(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 200);
  std::vector<double> v(n);
  for (auto& x : v) x = std::round(g(rng));
  return v;
}

}  // namespace

class SteadyStateAllocation : public ::testing::TestWithParam<es::Family> {};

TEST_P(SteadyStateAllocation, InferenceAllocatesNothingAfterWarmUp) {
  const auto family = GetParam();
  const auto spec = family == es::Family::LSTM ? es::build_lstm(64, 3, 2.0)
                                               : es::build_model(family, 256, 9, family == es::Family::DNN ? 128 : 256);
  const auto f = es::init_weights(spec, 1);
  const auto q = es::quantize_model(f);
  std::mt19937_64 rng(2);
  std::vector<std::vector<double>> inputs;
  for (int i = 0; i < 5; ++i) inputs.push_back(random_input(spec.channels * spec.samples, rng));

  for (const auto* bundle : {&q, &f}) {
    es::InferenceWorkspace ws;
    (void)es::infer_segment(*bundle, inputs[0], ws);
    const std::size_t before = g_allocations.load();
    for (const auto& x : inputs) (void)es::infer_segment(*bundle, x, ws);
    EXPECT_EQ(g_allocations.load() - before, 0u)
        << es::family_name(family) << (bundle == &q ? " quantized" : " float");
  }
}

INSTANTIATE_TEST_SUITE_P(Families, SteadyStateAllocation,
                         ::testing::Values(es::Family::DNN, es::Family::CNN, es::Family::LSTM),
                         [](const auto& info) { return std::string(es::family_name(info.param)); });
