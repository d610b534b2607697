// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/qtensor.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace edgeseizure {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::AccumulatorOverflow: return "AccumulatorOverflow";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::BadHeader: return "BadHeader";
    case Errc::ChannelCountMismatch: return "ChannelCountMismatch";
    case Errc::OverlappingAnnotations: return "OverlappingAnnotations";
    case Errc::UnsupportedFamily: return "UnsupportedFamily";
    case Errc::MissingClass: return "MissingClass";
    case Errc::ClassTooSmall: return "ClassTooSmall";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

bool QFormat::valid() const noexcept {
  return (total_bits == 8 || total_bits == 16 || total_bits == 32) &&
         frac_bits >= 0 && frac_bits < total_bits;
}

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>{});
}

FloatTensor::FloatTensor(Shape s) : shape(std::move(s)), data(shape_size(shape), 0.0) {}

FloatTensor::FloatTensor(Shape s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (shape_size(shape) != data.size()) {
    throw Error(Errc::ShapeMismatch, "tensor data length " + std::to_string(data.size()) +
                                         " does not match shape product " +
                                         std::to_string(shape_size(shape)));
  }
}

std::int64_t round_half_away(double x) noexcept {
  return static_cast<std::int64_t>(std::round(x));  // std::round is half-away.
}

std::int64_t saturate(std::int64_t raw, QFormat q, SaturationCounter& sat) noexcept {
  if (raw > q.raw_max()) {
    ++sat.count;
    return q.raw_max();
  }
  if (raw < q.raw_min()) {
    ++sat.count;
    return q.raw_min();
  }
  return raw;
}

std::int32_t quantize_value(double x, QFormat q, SaturationCounter& sat) noexcept {
  const double scaled = std::ldexp(x, q.frac_bits);
  // Clamp before the integer conversion so huge inputs stay defined.
  constexpr double lim = 0x1p62;
  const double bounded = scaled > lim ? lim : (scaled < -lim ? -lim : scaled);
  return static_cast<std::int32_t>(saturate(round_half_away(bounded), q, sat));
}

double dequantize_value(std::int64_t raw, QFormat q) noexcept {
  return std::ldexp(static_cast<double>(raw), -q.frac_bits);
}

QuantTensor quantize(const FloatTensor& t, QFormat q) {
  if (!q.valid()) throw Error(Errc::InvalidArgument, "invalid QFormat");
  QuantTensor out;
  out.shape = t.shape;
  out.q = q;
  out.data.resize(t.data.size());
  SaturationCounter sat;
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    out.data[i] = quantize_value(t.data[i], q, sat);
  }
  out.saturations = sat.count;
  return out;
}

FloatTensor dequantize(const QuantTensor& t) {
  FloatTensor out(t.shape);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    out.data[i] = dequantize_value(t.data[i], t.q);
  }
  return out;
}

std::int32_t mac_dot(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimensionMismatch, "mac_dot operand lengths " + std::to_string(a.size()) +
                                             " and " + std::to_string(b.size()));
  }
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<std::int64_t>(a[i]) * b[i];
  }
  if (acc > std::numeric_limits<std::int32_t>::max() ||
      acc < std::numeric_limits<std::int32_t>::min()) {
    throw Error(Errc::AccumulatorOverflow, "dot product " + std::to_string(acc) +
                                               " exceeds 32-bit accumulator");
  }
  return static_cast<std::int32_t>(acc);
}

std::int32_t requantize(std::int64_t acc, int source_frac, QFormat target,
                        SaturationCounter& sat) {
  const int shift = source_frac - target.frac_bits;
  if (shift < 0) {
    throw Error(Errc::InvalidArgument, "requantize cannot add fractional bits");
  }
  std::int64_t r = acc;
  if (shift > 0) {
    const std::int64_t half = std::int64_t{1} << (shift - 1);
    const std::int64_t mag = acc < 0 ? -acc : acc;
    const std::int64_t shifted = (mag + half) >> shift;
    r = acc < 0 ? -shifted : shifted;
  }
  return static_cast<std::int32_t>(saturate(r, target, sat));
}

}  // namespace edgeseizure
