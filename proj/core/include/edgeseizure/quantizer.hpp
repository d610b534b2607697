// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "edgeseizure/data.hpp"
#include "edgeseizure/eval.hpp"
#include "edgeseizure/models.hpp"

namespace edgeseizure {

/// Largest frac_bits in [0, total_bits - 1] for which max|x| rounds into
/// the positive raw range. All-zero tensors get total_bits - 1.
QFormat choose_qformat(const FloatTensor& t, int total_bits = 8);

/// Quantizes each coefficient tensor with its own format. Activations run
/// in kActivationFormat.
WeightBundle quantize_model(const WeightBundle& float_bundle);

/// Float bundle holding the exact values a quantized bundle represents.
WeightBundle dequantize_model(const WeightBundle& quant_bundle);

struct DegradationReport {
  SegmentMetrics float_metrics;
  SegmentMetrics quant_metrics;
  double accuracy_float = 0.0;
  double accuracy_quant = 0.0;
  double delta = 0.0;      // accuracy_float - accuracy_quant
  double agreement = 0.0;  // share of segments with identical argmax
  std::size_t saturations = 0;
};

DegradationReport degradation_report(const WeightBundle& float_bundle,
                                     const WeightBundle& quant_bundle,
                                     std::span<const Segment> segments);

void add_degradation_report(Report& report, const DegradationReport& d);

}  // namespace edgeseizure
