// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/cost.hpp"

#include <algorithm>
#include <chrono>

#include "edgeseizure/error.hpp"

namespace edgeseizure {

std::uint64_t mac_fc(std::uint64_t c_in, std::uint64_t c_out) noexcept { return c_in * c_out; }

std::uint64_t mac_conv(std::uint64_t c_in, std::uint64_t m_out, std::uint64_t n_out,
                       std::uint64_t c_out, std::uint64_t h, std::uint64_t v) noexcept {
  return c_in * m_out * n_out * c_out * h * v;
}

std::uint64_t mac_lstm(std::uint64_t d, std::uint64_t hidden, std::uint64_t steps) noexcept {
  return 4 * (d * hidden + hidden * hidden) * steps;
}

CostReport model_cost(const ModelSpec& spec, int coef_bits, int act_bits) {
  if (coef_bits <= 0 || act_bits <= 0 || coef_bits % 8 != 0 || act_bits % 8 != 0) {
    throw Error(Errc::InvalidArgument, "bit widths must be positive multiples of 8");
  }
  const std::uint64_t cb = static_cast<std::uint64_t>(coef_bits) / 8;
  const std::uint64_t ab = static_cast<std::uint64_t>(act_bits) / 8;
  CostReport r;
  std::uint64_t largest = 0;
  for (const LayerDesc& l : spec.layers) {
    CostEntry e{l.kind, {}};
    switch (l.kind) {
      case LayerKind::Fc:
        e.cost.macs = mac_fc(l.in.size(), l.units);
        r.fc_macs += e.cost.macs;
        break;
      case LayerKind::Conv:
        e.cost.macs = mac_conv(l.in.channels, l.out.length, 1, l.units, l.kernel_len, 1);
        r.conv_macs += e.cost.macs;
        break;
      case LayerKind::BiLstm:
        e.cost.macs = 2 * mac_lstm(l.in.channels, l.units, l.in.length);
        r.lstm_macs += e.cost.macs;
        break;
      default:
        break;
    }
    if (l.trainable()) {
      std::uint64_t params = 0;
      for (const Shape& s : tensor_shapes(l)) params += shape_size(s);
      r.parameters += params;
      e.cost.weight_bytes = params * cb;
      r.weight_bytes += e.cost.weight_bytes;
    }
    e.cost.activation_bytes = (l.in.size() + l.out.size()) * ab;
    largest = std::max({largest, static_cast<std::uint64_t>(l.in.size()),
                        static_cast<std::uint64_t>(l.out.size())});
    r.layers.push_back(e);
  }
  r.peak_activation_bytes = 2 * largest * ab;
  return r;
}

std::uint64_t instrumented_count(const WeightBundle& bundle, std::span<const double> segment) {
  if (bundle.spec.layers.empty()) return 0;
  MacCounter counter;
  InferenceWorkspace ws;
  ws.counter = &counter;
  infer_segment(bundle, segment, ws);
  return counter.conv_fc();
}

TimingReport bench_inference(const WeightBundle& bundle, std::span<const FloatTensor> segments,
                             std::size_t repetitions) {
  if (repetitions < 10) throw Error(Errc::InvalidArgument, "benchmark needs at least 10 repetitions");
  if (segments.empty()) throw Error(Errc::EmptyInput, "benchmark needs at least one segment");
  using clock = std::chrono::steady_clock;
  InferenceWorkspace ws;
  for (const auto& s : segments) infer_segment(bundle, s.data, ws);
  std::vector<double> per_segment;
  per_segment.reserve(repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto t0 = clock::now();
    for (const auto& s : segments) infer_segment(bundle, s.data, ws);
    const std::chrono::duration<double, std::micro> dt = clock::now() - t0;
    per_segment.push_back(dt.count() / static_cast<double>(segments.size()));
  }
  std::sort(per_segment.begin(), per_segment.end());
  TimingReport t;
  t.repetitions = repetitions;
  t.segments = segments.size();
  t.median_us = per_segment[per_segment.size() / 2];
  t.p95_us = per_segment[std::min(per_segment.size() - 1, (per_segment.size() * 95 + 99) / 100 - 1)];
  t.min_us = per_segment.front();
  return t;
}

void add_cost_report(Report& report, const CostReport& c) {
  report.add("macs_conv", static_cast<std::size_t>(c.conv_macs));
  report.add("macs_fc", static_cast<std::size_t>(c.fc_macs));
  report.add("macs_conv_fc", static_cast<std::size_t>(c.conv_fc_macs()));
  report.add("macs_lstm_extension", static_cast<std::size_t>(c.lstm_macs));
  report.add("macs_total", static_cast<std::size_t>(c.total_macs()));
  report.add("parameters", static_cast<std::size_t>(c.parameters));
  report.add("weight_bytes", static_cast<std::size_t>(c.weight_bytes));
  report.add("peak_activation_bytes", static_cast<std::size_t>(c.peak_activation_bytes));
  for (std::size_t i = 0; i < c.layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i) + "_" + std::string(layer_kind_name(c.layers[i].kind));
    report.add(p + "_macs", static_cast<std::size_t>(c.layers[i].cost.macs));
    report.add(p + "_weight_bytes", static_cast<std::size_t>(c.layers[i].cost.weight_bytes));
  }
}

}  // namespace edgeseizure
