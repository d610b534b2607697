// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "edgeseizure/qtensor.hpp"

namespace edgeseizure {

enum class Label : std::uint8_t { Ictal = 0, Preictal = 1, Interictal = 2 };
inline constexpr std::size_t kNumClasses = 3;

std::string_view label_name(Label label) noexcept;

enum class Activation : std::uint8_t { None, Relu };
enum class ConvMode : std::uint8_t { Depthwise, Standard };

/// Fully connected: w is [out x in], b is [out].
template <class T>
struct FcParams {
  T w;
  T b;
  friend bool operator==(const FcParams&, const FcParams&) = default;
};

/// 1-D convolution: kernels [C_out x C_in x h] (C_in == 1 in depthwise mode),
/// one bias per kernel.
template <class T>
struct ConvParams {
  T kernels;
  T biases;
  ConvMode mode = ConvMode::Standard;
  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

/// Gate order throughout: forget, input, output, candidate.
enum Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kCandidate = 3 };

/// wx[g] is [hidden x in], wh[g] is [hidden x hidden], b[g] is [hidden].
template <class T>
struct LstmCellParams {
  std::array<T, 4> wx;
  std::array<T, 4> wh;
  std::array<T, 4> b;
  friend bool operator==(const LstmCellParams&, const LstmCellParams&) = default;
};

template <class T>
struct BiLstmParams {
  LstmCellParams<T> fwd;
  LstmCellParams<T> bwd;
  friend bool operator==(const BiLstmParams&, const BiLstmParams&) = default;
};

using FcWeights = FcParams<FloatTensor>;
using ConvWeights = ConvParams<FloatTensor>;
using LstmCellWeights = LstmCellParams<FloatTensor>;
using BiLstmWeights = BiLstmParams<FloatTensor>;

using QFcWeights = FcParams<QuantTensor>;
using QConvWeights = ConvParams<QuantTensor>;
using QLstmCellWeights = LstmCellParams<QuantTensor>;
using QBiLstmWeights = BiLstmParams<QuantTensor>;

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

struct QLstmState {
  std::vector<std::int32_t> h;
  std::vector<std::int32_t> c;
};

/// Multiplies executed per layer kind, tallied by the forward kernels.
struct MacCounter {
  std::uint64_t conv = 0;
  std::uint64_t fc = 0;
  std::uint64_t lstm = 0;
  std::uint64_t conv_fc() const noexcept { return conv + fc; }
};

// ---------------------------------------------------------------------------
// Scalar activations

inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }
double hard_sigmoid(double x) noexcept;
double softsign(double x) noexcept;

/// Fixed-point versions on raw values in format `q`.
std::int32_t hard_sigmoid_q(std::int32_t x, QFormat q) noexcept;
std::int32_t softsign_q(std::int32_t x, QFormat q) noexcept;

// ---------------------------------------------------------------------------
// Float kernels. `x` is row-major [channels x length] wherever a matrix is
// expected. Output spans must be sized by the caller.

/// Per channel: remove the mean, divide by the max absolute deviation.
void scale_forward(std::span<const double> x, std::size_t channels, std::size_t length,
                   std::span<double> out);
FloatTensor scale_forward(const FloatTensor& segment);

void fc_forward(std::span<const double> x, const FcWeights& w, Activation act,
                std::span<double> y, MacCounter* counter = nullptr);
std::vector<double> fc_forward(std::span<const double> x, const FcWeights& w,
                               Activation act);

/// Zero padding on the left of a "same" convolution with kernel length h.
/// Odd h pads (h-1)/2 on both sides; even h pads h/2 left and h/2-1 right.
constexpr std::size_t same_pad_left(std::size_t h) noexcept { return h / 2; }

std::size_t conv_output_channels(const ConvWeights& w, std::size_t in_channels);

/// `padded` is caller scratch of at least length + h - 1 entries.
void conv1d_forward(std::span<const double> x, std::size_t in_channels, std::size_t length,
                    const ConvWeights& w, Activation act, std::span<double> out,
                    std::span<double> padded, MacCounter* counter = nullptr);
FloatTensor conv1d_forward(const FloatTensor& x, const ConvWeights& w,
                           Activation act = Activation::None);

void maxpool1d(std::span<const double> x, std::size_t channels, std::size_t length,
               std::size_t pool, std::span<double> out);
FloatTensor maxpool1d(const FloatTensor& x, std::size_t pool = 4);

/// `gates` is caller scratch of 4 * hidden entries.
void lstm_cell_step(std::span<const double> x, const LstmState& prev,
                    const LstmCellWeights& w, LstmState& next, std::span<double> gates,
                    MacCounter* counter = nullptr);
LstmState lstm_cell_step(std::span<const double> x, const LstmState& prev,
                         const LstmCellWeights& w);

std::size_t lstm_hidden_size(const LstmCellWeights& w);
std::size_t lstm_input_size(const LstmCellWeights& w);

/// Reusable state for one bidirectional pass.
struct BiLstmScratch {
  LstmState cur;
  LstmState next;
  std::vector<double> gates;
};

/// Sequence is row-major [T x d]. Output is [h_fwd after x_{T-1} ; h_bwd after
/// x_0], 2 * hidden entries.
void bilstm_forward(std::span<const double> sequence, std::size_t steps,
                    const LstmCellWeights& fwd, const LstmCellWeights& bwd,
                    std::span<double> out, BiLstmScratch& scratch,
                    MacCounter* counter = nullptr);
std::vector<double> bilstm_forward(std::span<const double> sequence, std::size_t steps,
                                   const LstmCellWeights& fwd, const LstmCellWeights& bwd);

/// Ties resolve to the lowest class index.
Label argmax_classify(std::span<const double> logits);

// ---------------------------------------------------------------------------
// Quantized kernels. FC and conv layers read activations in `in_q` and pick
// their output format per call; LSTM kernels work in a single `act_q`.
// Weight formats come from each QuantTensor.

/// Output format for accumulators holding `acc_frac` fractional bits: the
/// most fractional bits, at most cap.frac_bits, that keep the largest value
/// surviving the activation inside cap.total_bits.
QFormat fit_activation_format(std::span<const std::int64_t> acc, int acc_frac, Activation act,
                              QFormat cap = kActivationFormat);

/// Returns the output format picked by fit_activation_format. `acc` is
/// caller scratch of at least one entry per output.
QFormat fc_forward_q(std::span<const std::int32_t> x, QFormat in_q, const QFcWeights& w,
                     Activation act, std::span<std::int32_t> y, std::span<std::int64_t> acc,
                     SaturationCounter& sat, MacCounter* counter = nullptr,
                     QFormat cap = kActivationFormat);
std::vector<std::int32_t> fc_forward_q(std::span<const std::int32_t> x, QFormat in_q,
                                       const QFcWeights& w, Activation act,
                                       SaturationCounter& sat, QFormat* out_q = nullptr);

std::size_t conv_output_channels(const QConvWeights& w, std::size_t in_channels);

QFormat conv1d_forward_q(std::span<const std::int32_t> x, std::size_t in_channels,
                         std::size_t length, QFormat in_q, const QConvWeights& w,
                         Activation act, std::span<std::int32_t> out,
                         std::span<std::int32_t> padded, std::span<std::int64_t> acc,
                         SaturationCounter& sat, MacCounter* counter = nullptr,
                         QFormat cap = kActivationFormat);

void maxpool1d_q(std::span<const std::int32_t> x, std::size_t channels, std::size_t length,
                 std::size_t pool, std::span<std::int32_t> out);

/// `gates` is caller scratch of 4 * hidden entries.
void lstm_cell_step_q(std::span<const std::int32_t> x, QFormat act_q, const QLstmState& prev,
                      const QLstmCellWeights& w, QLstmState& next,
                      std::span<std::int32_t> gates, SaturationCounter& sat,
                      MacCounter* counter = nullptr);

struct QBiLstmScratch {
  QLstmState cur;
  QLstmState next;
  std::vector<std::int32_t> gates;
};

void bilstm_forward_q(std::span<const std::int32_t> sequence, std::size_t steps,
                      QFormat act_q, const QLstmCellWeights& fwd, const QLstmCellWeights& bwd,
                      std::span<std::int32_t> out, QBiLstmScratch& scratch,
                      SaturationCounter& sat, MacCounter* counter = nullptr);
std::vector<std::int32_t> bilstm_forward_q(std::span<const std::int32_t> sequence,
                                           std::size_t steps, QFormat act_q,
                                           const QLstmCellWeights& fwd,
                                           const QLstmCellWeights& bwd,
                                           SaturationCounter& sat);

}  // namespace edgeseizure
