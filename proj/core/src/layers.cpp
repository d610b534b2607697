// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace edgeseizure {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::DimensionMismatch, what);
}

// Four independent partial sums keep the dependency chain short.
double dot(const double* a, const double* b, std::size_t n) noexcept {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

std::int64_t dot_q(const std::int32_t* a, const std::int32_t* b, std::size_t n) noexcept {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<std::int64_t>(a[i]) * b[i];
  return s;
}

bool is_matrix(const Shape& s, std::size_t rows, std::size_t cols) noexcept {
  return s.size() == 2 && s[0] == rows && s[1] == cols;
}

void check_acc(std::int64_t acc) {
  if (acc > std::numeric_limits<std::int32_t>::max() ||
      acc < std::numeric_limits<std::int32_t>::min()) {
    throw Error(Errc::AccumulatorOverflow,
                "accumulator " + std::to_string(acc) + " exceeds 32 bits");
  }
}

// Moves a raw value from `from` fractional bits to `to` fractional bits.
// Only left shifts occur with the formats this library produces; a right
// shift falls back to requantize rounding.
std::int64_t align(std::int64_t raw, int from, int to, SaturationCounter& sat) {
  if (to >= from) return raw * (std::int64_t{1} << (to - from));
  return requantize(raw, from, QFormat{32, to}, sat);
}

double apply_act(double v, Activation act) noexcept {
  return act == Activation::Relu ? relu(v) : v;
}

}  // namespace

std::string_view label_name(Label label) noexcept {
  switch (label) {
    case Label::Ictal: return "ictal";
    case Label::Preictal: return "preictal";
    case Label::Interictal: return "interictal";
  }
  return "unknown";
}

double hard_sigmoid(double x) noexcept {
  return std::max(0.0, std::min(1.0, x / 5.0 + 0.5));
}

double softsign(double x) noexcept { return x / (1.0 + std::abs(x)); }

std::int32_t hard_sigmoid_q(std::int32_t x, QFormat q) noexcept {
  const std::int64_t one = std::int64_t{1} << q.frac_bits;
  const std::int64_t mag = x < 0 ? -std::int64_t{x} : std::int64_t{x};
  const std::int64_t fifth = (mag + 2) / 5;
  const std::int64_t y = (x < 0 ? -fifth : fifth) + one / 2;
  return static_cast<std::int32_t>(std::clamp<std::int64_t>(y, 0, one));
}

std::int32_t softsign_q(std::int32_t x, QFormat q) noexcept {
  const std::int64_t one = std::int64_t{1} << q.frac_bits;
  const std::int64_t mag = x < 0 ? -std::int64_t{x} : std::int64_t{x};
  const std::int64_t den = one + mag;
  const std::int64_t y = (mag * one + den / 2) / den;
  return static_cast<std::int32_t>(x < 0 ? -y : y);
}

// ---------------------------------------------------------------------------

void scale_forward(std::span<const double> x, std::size_t channels, std::size_t length,
                   std::span<double> out) {
  require(length >= 1, "scale_forward needs at least one sample");
  require(x.size() == channels * length && out.size() == x.size(),
          "scale_forward buffer size");
  for (std::size_t c = 0; c < channels; ++c) {
    const double* row = x.data() + c * length;
    double* dst = out.data() + c * length;
    double mean = 0.0;
    for (std::size_t t = 0; t < length; ++t) mean += row[t];
    mean /= static_cast<double>(length);
    double maxdev = 0.0;
    for (std::size_t t = 0; t < length; ++t) maxdev = std::max(maxdev, std::abs(row[t] - mean));
    if (maxdev == 0.0) {
      std::fill(dst, dst + length, 0.0);
      continue;
    }
    for (std::size_t t = 0; t < length; ++t) dst[t] = (row[t] - mean) / maxdev;
  }
}

FloatTensor scale_forward(const FloatTensor& segment) {
  require(segment.shape.size() == 2, "scale_forward expects [K x N]");
  FloatTensor out(segment.shape);
  scale_forward(segment.data, segment.shape[0], segment.shape[1], out.data);
  return out;
}

void fc_forward(std::span<const double> x, const FcWeights& w, Activation act,
                std::span<double> y, MacCounter* counter) {
  require(w.w.shape.size() == 2, "fc weight rank");
  const std::size_t out = w.w.shape[0];
  const std::size_t in = w.w.shape[1];
  require(x.size() == in, "fc input length");
  require(y.size() == out && w.b.size() == out, "fc output length");
  for (std::size_t j = 0; j < out; ++j) {
    y[j] = apply_act(dot(w.w.data.data() + j * in, x.data(), in) + w.b.data[j], act);
  }
  if (counter) counter->fc += in * out;
}

std::vector<double> fc_forward(std::span<const double> x, const FcWeights& w,
                               Activation act) {
  std::vector<double> y(w.w.shape.empty() ? 0 : w.w.shape[0]);
  fc_forward(x, w, act, y);
  return y;
}

std::size_t conv_output_channels(const ConvWeights& w, std::size_t in_channels) {
  const std::size_t kernels = w.kernels.shape.at(0);
  return w.mode == ConvMode::Depthwise ? in_channels * kernels : kernels;
}

void conv1d_forward(std::span<const double> x, std::size_t in_channels, std::size_t length,
                    const ConvWeights& w, Activation act, std::span<double> out,
                    std::span<double> padded, MacCounter* counter) {
  require(w.kernels.shape.size() == 3, "conv kernel rank");
  const std::size_t kernels = w.kernels.shape[0];
  const std::size_t kc = w.kernels.shape[1];
  const std::size_t h = w.kernels.shape[2];
  require(h >= 1 && length >= 1, "conv kernel/input length");
  require(x.size() == in_channels * length, "conv input size");
  require(w.biases.size() == kernels, "conv bias size");
  if (w.mode == ConvMode::Depthwise) {
    require(kc == 1, "depthwise kernels have one input channel");
  } else {
    require(kc == in_channels, "conv input channel count");
  }
  const std::size_t out_ch = conv_output_channels(w, in_channels);
  require(out.size() == out_ch * length, "conv output size");
  const std::size_t padded_len = length + h - 1;
  require(padded.size() >= padded_len, "conv scratch size");

  const std::size_t left = same_pad_left(h);
  const double* kdata = w.kernels.data.data();
  std::uint64_t macs = 0;

  auto load_padded = [&](std::size_t c) {
    std::fill(padded.begin(), padded.begin() + padded_len, 0.0);
    std::copy_n(x.data() + c * length, length, padded.begin() + left);
  };
  // out[t] += sum_k w[k] * padded[t + k]; inner loop over t vectorizes.
  auto accumulate = [&](const double* kern, double* dst) {
    for (std::size_t k = 0; k < h; ++k) {
      const double wk = kern[k];
      const double* src = padded.data() + k;
      for (std::size_t t = 0; t < length; ++t) dst[t] += wk * src[t];
      macs += length;
    }
  };

  if (w.mode == ConvMode::Depthwise) {
    for (std::size_t c = 0; c < in_channels; ++c) {
      load_padded(c);
      for (std::size_t o = 0; o < kernels; ++o) {
        double* dst = out.data() + (c * kernels + o) * length;
        std::fill(dst, dst + length, w.biases.data[o]);
        accumulate(kdata + o * h, dst);
      }
    }
  } else {
    for (std::size_t o = 0; o < kernels; ++o) {
      double* dst = out.data() + o * length;
      std::fill(dst, dst + length, w.biases.data[o]);
    }
    for (std::size_t c = 0; c < in_channels; ++c) {
      load_padded(c);
      for (std::size_t o = 0; o < kernels; ++o) {
        accumulate(kdata + (o * in_channels + c) * h, out.data() + o * length);
      }
    }
  }
  if (act == Activation::Relu) {
    for (double& v : out) v = relu(v);
  }
  if (counter) counter->conv += macs;
}

FloatTensor conv1d_forward(const FloatTensor& x, const ConvWeights& w, Activation act) {
  require(x.shape.size() == 2, "conv input must be [C x L]");
  const std::size_t c = x.shape[0];
  const std::size_t len = x.shape[1];
  FloatTensor out({conv_output_channels(w, c), len});
  std::vector<double> padded(len + w.kernels.shape.at(2) - 1);
  conv1d_forward(x.data, c, len, w, act, out.data, padded);
  return out;
}

void maxpool1d(std::span<const double> x, std::size_t channels, std::size_t length,
               std::size_t pool, std::span<double> out) {
  require(pool >= 1 && length >= pool, "maxpool input shorter than pool");
  const std::size_t out_len = length / pool;
  require(x.size() == channels * length && out.size() == channels * out_len,
          "maxpool buffer size");
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < out_len; ++i) {
      const double* blk = x.data() + c * length + i * pool;
      out[c * out_len + i] = *std::max_element(blk, blk + pool);
    }
  }
}

FloatTensor maxpool1d(const FloatTensor& x, std::size_t pool) {
  require(x.shape.size() == 2, "maxpool input must be [C x L]");
  FloatTensor out({x.shape[0], x.shape[1] / pool});
  maxpool1d(x.data, x.shape[0], x.shape[1], pool, out.data);
  return out;
}

std::size_t lstm_hidden_size(const LstmCellWeights& w) { return w.b[kForget].size(); }
std::size_t lstm_input_size(const LstmCellWeights& w) { return w.wx[kForget].shape.at(1); }

void lstm_cell_step(std::span<const double> x, const LstmState& prev,
                    const LstmCellWeights& w, LstmState& next, std::span<double> gates,
                    MacCounter* counter) {
  const std::size_t hid = lstm_hidden_size(w);
  const std::size_t in = lstm_input_size(w);
  require(x.size() == in, "lstm input size");
  require(prev.h.size() == hid && prev.c.size() == hid, "lstm state size");
  require(gates.size() >= 4 * hid, "lstm gate scratch size");
  for (std::size_t g = 0; g < 4; ++g) {
    require(is_matrix(w.wx[g].shape, hid, in) && is_matrix(w.wh[g].shape, hid, hid) &&
                w.b[g].size() == hid,
            "lstm weight shapes");
    for (std::size_t j = 0; j < hid; ++j) {
      const double z = dot(w.wh[g].data.data() + j * hid, prev.h.data(), hid) +
                       dot(w.wx[g].data.data() + j * in, x.data(), in) + w.b[g].data[j];
      gates[g * hid + j] = g == kCandidate ? softsign(z) : hard_sigmoid(z);
    }
  }
  next.h.resize(hid);
  next.c.resize(hid);
  for (std::size_t j = 0; j < hid; ++j) {
    const double f = gates[kForget * hid + j];
    const double i = gates[kInput * hid + j];
    const double o = gates[kOutput * hid + j];
    const double cand = gates[kCandidate * hid + j];
    next.c[j] = f * prev.c[j] + i * cand;
    next.h[j] = o * softsign(next.c[j]);
  }
  if (counter) counter->lstm += 4 * (in * hid + hid * hid);
}

LstmState lstm_cell_step(std::span<const double> x, const LstmState& prev,
                         const LstmCellWeights& w) {
  LstmState next;
  std::vector<double> gates(4 * lstm_hidden_size(w));
  lstm_cell_step(x, prev, w, next, gates);
  return next;
}

void bilstm_forward(std::span<const double> sequence, std::size_t steps,
                    const LstmCellWeights& fwd, const LstmCellWeights& bwd,
                    std::span<double> out, BiLstmScratch& s, MacCounter* counter) {
  const std::size_t hid = lstm_hidden_size(fwd);
  const std::size_t in = lstm_input_size(fwd);
  require(steps >= 1, "bilstm needs at least one step");
  require(lstm_hidden_size(bwd) == hid && lstm_input_size(bwd) == in,
          "bilstm direction sizes differ");
  require(sequence.size() == steps * in, "bilstm sequence size");
  require(out.size() == 2 * hid, "bilstm output size");
  s.gates.resize(4 * hid);

  auto run = [&](const LstmCellWeights& w, bool reverse, double* dst) {
    s.cur.h.assign(hid, 0.0);
    s.cur.c.assign(hid, 0.0);
    for (std::size_t n = 0; n < steps; ++n) {
      const std::size_t t = reverse ? steps - 1 - n : n;
      lstm_cell_step(sequence.subspan(t * in, in), s.cur, w, s.next, s.gates, counter);
      std::swap(s.cur, s.next);
    }
    std::copy(s.cur.h.begin(), s.cur.h.end(), dst);
  };
  run(fwd, false, out.data());
  run(bwd, true, out.data() + hid);
}

std::vector<double> bilstm_forward(std::span<const double> sequence, std::size_t steps,
                                   const LstmCellWeights& fwd, const LstmCellWeights& bwd) {
  std::vector<double> out(2 * lstm_hidden_size(fwd));
  BiLstmScratch s;
  bilstm_forward(sequence, steps, fwd, bwd, out, s);
  return out;
}

Label argmax_classify(std::span<const double> logits) {
  require(logits.size() == kNumClasses, "classifier expects three logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumClasses; ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<Label>(best);
}

// ---------------------------------------------------------------------------

QFormat fit_activation_format(std::span<const std::int64_t> acc, int acc_frac, Activation act,
                              QFormat cap) {
  std::int64_t peak = 0;
  for (const std::int64_t a : acc) {
    const std::int64_t m = act == Activation::Relu ? a : (a < 0 ? -a : a);
    peak = std::max(peak, m);
  }
  int f = std::max(0, std::min(cap.frac_bits, acc_frac));
  for (; f > 0; --f) {
    const int shift = acc_frac - f;
    const std::int64_t rounded = shift > 0 ? (peak + (std::int64_t{1} << (shift - 1))) >> shift : peak;
    if (rounded <= QFormat{cap.total_bits, f}.raw_max()) break;
  }
  return QFormat{cap.total_bits, f};
}

namespace {

void emit_q(std::span<const std::int64_t> acc, int acc_frac, Activation act, QFormat out_q,
            std::span<std::int32_t> y, SaturationCounter& sat) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::int64_t a = act == Activation::Relu && acc[i] < 0 ? 0 : acc[i];
    y[i] = requantize(a, acc_frac, out_q, sat);
  }
}

}  // namespace

QFormat fc_forward_q(std::span<const std::int32_t> x, QFormat in_q, const QFcWeights& w,
                     Activation act, std::span<std::int32_t> y, std::span<std::int64_t> acc,
                     SaturationCounter& sat, MacCounter* counter, QFormat cap) {
  require(w.w.shape.size() == 2, "fc weight rank");
  const std::size_t out = w.w.shape[0];
  const std::size_t in = w.w.shape[1];
  require(x.size() == in, "fc input length");
  require(y.size() == out && w.b.size() == out, "fc output length");
  require(acc.size() >= out, "fc accumulator scratch size");
  const int acc_frac = w.w.q.frac_bits + in_q.frac_bits;
  const std::span<const std::int32_t> wdata(w.w.data);
  for (std::size_t j = 0; j < out; ++j) {
    std::int64_t a = mac_dot(wdata.subspan(j * in, in), x);
    a += align(w.b.data[j], w.b.q.frac_bits, acc_frac, sat);
    check_acc(a);
    acc[j] = a;
  }
  const QFormat out_q = fit_activation_format(acc.first(out), acc_frac, act, cap);
  emit_q(acc.first(out), acc_frac, act, out_q, y, sat);
  if (counter) counter->fc += in * out;
  return out_q;
}

std::vector<std::int32_t> fc_forward_q(std::span<const std::int32_t> x, QFormat in_q,
                                       const QFcWeights& w, Activation act,
                                       SaturationCounter& sat, QFormat* out_q) {
  std::vector<std::int32_t> y(w.w.shape.at(0));
  std::vector<std::int64_t> acc(y.size());
  const QFormat q = fc_forward_q(x, in_q, w, act, y, acc, sat);
  if (out_q) *out_q = q;
  return y;
}

std::size_t conv_output_channels(const QConvWeights& w, std::size_t in_channels) {
  const std::size_t kernels = w.kernels.shape.at(0);
  return w.mode == ConvMode::Depthwise ? in_channels * kernels : kernels;
}

QFormat conv1d_forward_q(std::span<const std::int32_t> x, std::size_t in_channels,
                         std::size_t length, QFormat in_q, const QConvWeights& w,
                         Activation act, std::span<std::int32_t> out,
                         std::span<std::int32_t> padded, std::span<std::int64_t> acc,
                         SaturationCounter& sat, MacCounter* counter, QFormat cap) {
  require(w.kernels.shape.size() == 3, "conv kernel rank");
  const std::size_t kernels = w.kernels.shape[0];
  const std::size_t kc = w.kernels.shape[1];
  const std::size_t h = w.kernels.shape[2];
  require(h >= 1 && length >= 1, "conv kernel/input length");
  require(x.size() == in_channels * length, "conv input size");
  require(w.biases.size() == kernels, "conv bias size");
  if (w.mode == ConvMode::Depthwise) {
    require(kc == 1, "depthwise kernels have one input channel");
  } else {
    require(kc == in_channels, "conv input channel count");
  }
  const std::size_t out_ch = conv_output_channels(w, in_channels);
  require(out.size() == out_ch * length, "conv output size");
  const std::size_t padded_len = length + h - 1;
  require(padded.size() >= padded_len, "conv scratch size");
  require(acc.size() >= out_ch * length, "conv accumulator scratch size");

  const std::size_t left = same_pad_left(h);
  const int acc_frac = w.kernels.q.frac_bits + in_q.frac_bits;
  const std::int32_t* kdata = w.kernels.data.data();
  std::uint64_t macs = 0;

  auto load_padded = [&](std::size_t c) {
    std::fill(padded.begin(), padded.begin() + padded_len, 0);
    std::copy_n(x.data() + c * length, length, padded.begin() + left);
  };
  auto accumulate = [&](const std::int32_t* kern, std::int64_t* dst) {
    for (std::size_t k = 0; k < h; ++k) {
      const std::int64_t wk = kern[k];
      const std::int32_t* src = padded.data() + k;
      for (std::size_t t = 0; t < length; ++t) dst[t] += wk * src[t];
      macs += length;
    }
  };
  auto init_bias = [&](std::size_t o, std::int64_t* dst) {
    const std::int64_t b = align(w.biases.data[o], w.biases.q.frac_bits, acc_frac, sat);
    std::fill(dst, dst + length, b);
  };

  if (w.mode == ConvMode::Depthwise) {
    for (std::size_t c = 0; c < in_channels; ++c) {
      load_padded(c);
      for (std::size_t o = 0; o < kernels; ++o) {
        std::int64_t* dst = acc.data() + (c * kernels + o) * length;
        init_bias(o, dst);
        accumulate(kdata + o * h, dst);
      }
    }
  } else {
    for (std::size_t o = 0; o < kernels; ++o) init_bias(o, acc.data() + o * length);
    for (std::size_t c = 0; c < in_channels; ++c) {
      load_padded(c);
      for (std::size_t o = 0; o < kernels; ++o) {
        accumulate(kdata + (o * in_channels + c) * h, acc.data() + o * length);
      }
    }
  }
  const auto used = acc.first(out_ch * length);
  for (const std::int64_t a : used) check_acc(a);
  const QFormat out_q = fit_activation_format(used, acc_frac, act, cap);
  emit_q(used, acc_frac, act, out_q, out, sat);
  if (counter) counter->conv += macs;
  return out_q;
}

void maxpool1d_q(std::span<const std::int32_t> x, std::size_t channels, std::size_t length,
                 std::size_t pool, std::span<std::int32_t> out) {
  require(pool >= 1 && length >= pool, "maxpool input shorter than pool");
  const std::size_t out_len = length / pool;
  require(x.size() == channels * length && out.size() == channels * out_len,
          "maxpool buffer size");
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < out_len; ++i) {
      const std::int32_t* blk = x.data() + c * length + i * pool;
      out[c * out_len + i] = *std::max_element(blk, blk + pool);
    }
  }
}

void lstm_cell_step_q(std::span<const std::int32_t> x, QFormat act_q, const QLstmState& prev,
                      const QLstmCellWeights& w, QLstmState& next,
                      std::span<std::int32_t> gates, SaturationCounter& sat,
                      MacCounter* counter) {
  const std::size_t hid = w.b[kForget].size();
  const std::size_t in = w.wx[kForget].shape.at(1);
  require(x.size() == in, "lstm input size");
  require(prev.h.size() == hid && prev.c.size() == hid, "lstm state size");
  require(gates.size() >= 4 * hid, "lstm gate scratch size");
  const int fa = act_q.frac_bits;
  for (std::size_t g = 0; g < 4; ++g) {
    const QuantTensor& wx = w.wx[g];
    const QuantTensor& wh = w.wh[g];
    require(is_matrix(wx.shape, hid, in) && is_matrix(wh.shape, hid, hid) && w.b[g].size() == hid,
            "lstm weight shapes");
    const int fx = wx.q.frac_bits + fa;
    const int fh = wh.q.frac_bits + fa;
    const int common = std::max(fx, fh);
    for (std::size_t j = 0; j < hid; ++j) {
      const std::int64_t ax = dot_q(wx.data.data() + j * in, x.data(), in);
      const std::int64_t ah = dot_q(wh.data.data() + j * hid, prev.h.data(), hid);
      check_acc(ax);
      check_acc(ah);
      const std::int64_t acc = align(ax, fx, common, sat) + align(ah, fh, common, sat) +
                               align(w.b[g].data[j], w.b[g].q.frac_bits, common, sat);
      check_acc(acc);
      const std::int32_t z = requantize(acc, common, act_q, sat);
      gates[g * hid + j] = g == kCandidate ? softsign_q(z, act_q) : hard_sigmoid_q(z, act_q);
    }
  }
  next.h.resize(hid);
  next.c.resize(hid);
  for (std::size_t j = 0; j < hid; ++j) {
    const std::int64_t f = gates[kForget * hid + j];
    const std::int64_t i = gates[kInput * hid + j];
    const std::int64_t o = gates[kOutput * hid + j];
    const std::int64_t cand = gates[kCandidate * hid + j];
    const std::int64_t c = f * prev.c[j] + i * cand;
    next.c[j] = requantize(c, 2 * fa, act_q, sat);
    next.h[j] = requantize(o * softsign_q(next.c[j], act_q), 2 * fa, act_q, sat);
  }
  if (counter) counter->lstm += 4 * (in * hid + hid * hid);
}

void bilstm_forward_q(std::span<const std::int32_t> sequence, std::size_t steps,
                      QFormat act_q, const QLstmCellWeights& fwd, const QLstmCellWeights& bwd,
                      std::span<std::int32_t> out, QBiLstmScratch& s, SaturationCounter& sat,
                      MacCounter* counter) {
  const std::size_t hid = fwd.b[kForget].size();
  const std::size_t in = fwd.wx[kForget].shape.at(1);
  require(steps >= 1, "bilstm needs at least one step");
  require(bwd.b[kForget].size() == hid && bwd.wx[kForget].shape.at(1) == in,
          "bilstm direction sizes differ");
  require(sequence.size() == steps * in, "bilstm sequence size");
  require(out.size() == 2 * hid, "bilstm output size");
  s.gates.resize(4 * hid);

  auto run = [&](const QLstmCellWeights& w, bool reverse, std::int32_t* dst) {
    s.cur.h.assign(hid, 0);
    s.cur.c.assign(hid, 0);
    for (std::size_t n = 0; n < steps; ++n) {
      const std::size_t t = reverse ? steps - 1 - n : n;
      lstm_cell_step_q(sequence.subspan(t * in, in), act_q, s.cur, w, s.next, s.gates, sat,
                       counter);
      std::swap(s.cur, s.next);
    }
    std::copy(s.cur.h.begin(), s.cur.h.end(), dst);
  };
  run(fwd, false, out.data());
  run(bwd, true, out.data() + hid);
}

std::vector<std::int32_t> bilstm_forward_q(std::span<const std::int32_t> sequence,
                                           std::size_t steps, QFormat act_q,
                                           const QLstmCellWeights& fwd,
                                           const QLstmCellWeights& bwd,
                                           SaturationCounter& sat) {
  std::vector<std::int32_t> out(2 * fwd.b[kForget].size());
  QBiLstmScratch s;
  bilstm_forward_q(sequence, steps, act_q, fwd, bwd, out, s, sat);
  return out;
}

}  // namespace edgeseizure
