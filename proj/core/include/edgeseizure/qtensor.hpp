// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edgeseizure/error.hpp"

namespace edgeseizure {

/// Signed fixed-point format Q(total_bits, frac_bits): raw r means r * 2^-frac_bits.
struct QFormat {
  int total_bits = 8;
  int frac_bits = 7;

  constexpr std::int64_t raw_min() const noexcept {
    return -(std::int64_t{1} << (total_bits - 1));
  }
  constexpr std::int64_t raw_max() const noexcept {
    return (std::int64_t{1} << (total_bits - 1)) - 1;
  }
  constexpr double step() const noexcept {
    return 1.0 / static_cast<double>(std::int64_t{1} << frac_bits);
  }
  bool valid() const noexcept;

  friend bool operator==(const QFormat&, const QFormat&) = default;
};

/// Coefficients.
inline constexpr QFormat kWeightFormat{8, 7};
/// Activations between layers; inputs are scaled to [-1, 1].
inline constexpr QFormat kActivationFormat{16, 12};

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;

/// Row-major real-valued tensor.
struct FloatTensor {
  Shape shape;
  std::vector<double> data;

  FloatTensor() = default;
  explicit FloatTensor(Shape s);
  FloatTensor(Shape s, std::vector<double> values);

  std::size_t size() const noexcept { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  friend bool operator==(const FloatTensor&, const FloatTensor&) = default;
};

/// Row-major integer tensor with a fixed-point format.
struct QuantTensor {
  Shape shape;
  std::vector<std::int32_t> data;
  QFormat q;
  /// Entries clipped to the format range when this tensor was produced.
  std::size_t saturations = 0;

  std::size_t size() const noexcept { return data.size(); }

  friend bool operator==(const QuantTensor& a, const QuantTensor& b) {
    return a.shape == b.shape && a.data == b.data && a.q == b.q;
  }
};

/// Running count of saturation events during quantized computation.
struct SaturationCounter {
  std::size_t count = 0;
};

/// Round-half-away-from-zero.
std::int64_t round_half_away(double x) noexcept;

/// Clamp `raw` into q's range, bumping `sat` when clipping happens.
std::int64_t saturate(std::int64_t raw, QFormat q, SaturationCounter& sat) noexcept;

std::int32_t quantize_value(double x, QFormat q, SaturationCounter& sat) noexcept;
double dequantize_value(std::int64_t raw, QFormat q) noexcept;

QuantTensor quantize(const FloatTensor& t, QFormat q);
FloatTensor dequantize(const QuantTensor& t);

/// Exact integer dot product. The accumulator carries
/// frac_bits = a.frac_bits + b.frac_bits. Throws AccumulatorOverflow when
/// the exact sum leaves the 32-bit signed range.
std::int32_t mac_dot(std::span<const std::int32_t> a,
                     std::span<const std::int32_t> b);

/// Rescale an accumulator holding `source_frac` fractional bits into
/// `target`, rounding half away from zero before truncation, then saturating.
std::int32_t requantize(std::int64_t acc, int source_frac, QFormat target,
                        SaturationCounter& sat);

}  // namespace edgeseizure
