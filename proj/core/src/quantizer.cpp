// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "edgeseizure/error.hpp"

namespace edgeseizure {
namespace {

template <class T, class F>
auto map_params(const FcParams<T>& p, F f) {
  return FcParams<decltype(f(p.w))>{f(p.w), f(p.b)};
}

template <class T, class F>
auto map_params(const ConvParams<T>& p, F f) {
  return ConvParams<decltype(f(p.kernels))>{f(p.kernels), f(p.biases), p.mode};
}

template <class T, class F>
auto map_cell(const LstmCellParams<T>& p, F f) {
  LstmCellParams<decltype(f(p.wx[0]))> out;
  for (std::size_t g = 0; g < 4; ++g) {
    out.wx[g] = f(p.wx[g]);
    out.wh[g] = f(p.wh[g]);
    out.b[g] = f(p.b[g]);
  }
  return out;
}

template <class T, class F>
auto map_params(const BiLstmParams<T>& p, F f) {
  return BiLstmParams<decltype(f(p.fwd.wx[0]))>{map_cell(p.fwd, f), map_cell(p.bwd, f)};
}

}  // namespace

QFormat choose_qformat(const FloatTensor& t, int total_bits) {
  if (t.data.empty()) throw Error(Errc::EmptyInput, "cannot choose a format for an empty tensor");
  if (total_bits < 2 || total_bits > 32) throw Error(Errc::InvalidArgument, "total_bits out of range");
  double peak = 0.0;
  for (double v : t.data) peak = std::max(peak, std::abs(v));
  for (int frac = total_bits - 1; frac > 0; --frac) {
    const QFormat q{total_bits, frac};
    if (round_half_away(std::ldexp(peak, frac)) <= q.raw_max()) return q;
  }
  return QFormat{total_bits, 0};
}

WeightBundle quantize_model(const WeightBundle& b) {
  if (b.precision != Precision::Float32) {
    throw Error(Errc::InvalidArgument, "quantize_model expects a float bundle");
  }
  b.validate();
  auto q = [](const FloatTensor& t) { return quantize(t, choose_qformat(t)); };
  WeightBundle out;
  out.spec = b.spec;
  out.precision = Precision::Quantized;
  for (const auto& layer : b.float_params) {
    out.quant_params.push_back(
        std::visit([&](const auto& p) -> QuantLayerParams { return map_params(p, q); }, layer));
  }
  return out;
}

WeightBundle dequantize_model(const WeightBundle& b) {
  if (b.precision != Precision::Quantized) {
    throw Error(Errc::InvalidArgument, "dequantize_model expects a quantized bundle");
  }
  auto d = [](const QuantTensor& t) { return dequantize(t); };
  WeightBundle out;
  out.spec = b.spec;
  out.precision = Precision::Float32;
  for (const auto& layer : b.quant_params) {
    out.float_params.push_back(
        std::visit([&](const auto& p) -> FloatLayerParams { return map_params(p, d); }, layer));
  }
  return out;
}

DegradationReport degradation_report(const WeightBundle& fb, const WeightBundle& qb,
                                     std::span<const Segment> segments) {
  if (segments.empty()) throw Error(Errc::EmptyInput, "degradation report needs segments");
  if (!(fb.spec == qb.spec)) throw Error(Errc::InvalidArgument, "bundles describe different models");
  InferenceWorkspace wf, wq;
  std::vector<LabelPair> pf, pq;
  pf.reserve(segments.size());
  pq.reserve(segments.size());
  DegradationReport r;
  std::size_t agree = 0;
  for (const Segment& s : segments) {
    const InferenceResult a = infer_segment(fb, s.data.data, wf);
    const InferenceResult c = infer_segment(qb, s.data.data, wq);
    pf.push_back({a.label, s.label});
    pq.push_back({c.label, s.label});
    agree += a.label == c.label;
    r.saturations += a.saturations + c.saturations;
  }
  r.float_metrics = segment_metrics(pf);
  r.quant_metrics = segment_metrics(pq);
  r.accuracy_float = r.float_metrics.accuracy;
  r.accuracy_quant = r.quant_metrics.accuracy;
  r.delta = r.accuracy_float - r.accuracy_quant;
  r.agreement = static_cast<double>(agree) / static_cast<double>(segments.size());
  return r;
}

void add_degradation_report(Report& report, const DegradationReport& d) {
  report.add("accuracy_float", d.accuracy_float);
  report.add("accuracy_quant", d.accuracy_quant);
  report.add("accuracy_delta", d.delta);
  report.add("argmax_agreement", d.agreement);
  report.add("saturations", d.saturations);
  report.add_segment_metrics("float_", d.float_metrics);
  report.add_segment_metrics("quant_", d.quant_metrics);
}

}  // namespace edgeseizure
