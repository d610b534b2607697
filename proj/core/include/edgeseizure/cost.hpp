// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgeseizure/eval.hpp"
#include "edgeseizure/models.hpp"

namespace edgeseizure {

std::uint64_t mac_fc(std::uint64_t c_in, std::uint64_t c_out) noexcept;
std::uint64_t mac_conv(std::uint64_t c_in, std::uint64_t m_out, std::uint64_t n_out,
                       std::uint64_t c_out, std::uint64_t h, std::uint64_t v) noexcept;
/// 4 * (d*h + h*h) * T for one direction. Not part of the Conv/FC totals.
std::uint64_t mac_lstm(std::uint64_t d, std::uint64_t hidden, std::uint64_t steps) noexcept;

struct LayerCost {
  std::uint64_t macs = 0;
  std::uint64_t weight_bytes = 0;
  std::uint64_t activation_bytes = 0;
};

struct CostEntry {
  LayerKind kind = LayerKind::Fc;
  LayerCost cost;
};

struct CostReport {
  std::vector<CostEntry> layers;  // one per layer of the spec
  std::uint64_t conv_macs = 0;
  std::uint64_t fc_macs = 0;
  std::uint64_t lstm_macs = 0;   // extension, reported separately
  std::uint64_t parameters = 0;
  std::uint64_t weight_bytes = 0;
  /// Two equal buffers sized for the largest activation (ping-pong).
  std::uint64_t peak_activation_bytes = 0;

  std::uint64_t conv_fc_macs() const noexcept { return conv_macs + fc_macs; }
  std::uint64_t total_macs() const noexcept { return conv_macs + fc_macs + lstm_macs; }
};

/// Max-pool, scaling, dropout, and activations cost nothing.
CostReport model_cost(const ModelSpec& spec, int coef_bits = 8, int act_bits = 16);

/// Runs one inference with a multiply counter; Conv and FC multiplies only.
std::uint64_t instrumented_count(const WeightBundle& bundle, std::span<const double> segment);

struct TimingReport {
  std::size_t repetitions = 0;
  std::size_t segments = 0;
  double median_us = 0.0;  // per segment
  double p95_us = 0.0;
  double min_us = 0.0;
};

/// Times whole passes over `segments` after one untimed warm-up pass.
/// Requires repetitions >= 10.
TimingReport bench_inference(const WeightBundle& bundle, std::span<const FloatTensor> segments,
                             std::size_t repetitions);

void add_cost_report(Report& report, const CostReport& cost);

}  // namespace edgeseizure
