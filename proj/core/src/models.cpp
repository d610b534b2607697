// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <string>

namespace edgeseizure {
namespace {

void fail(const std::string& what) { throw Error(Errc::InvalidArgument, what); }

// Accumulates layers while tracking the running activation shape.
class SpecBuilder {
 public:
  SpecBuilder(Family family, int fs, std::size_t channels, std::size_t samples) {
    spec_.family = family;
    spec_.fs = fs;
    spec_.channels = channels;
    spec_.samples = samples;
    cur_ = {channels, samples};
  }

  SpecBuilder& scale() { return push({LayerKind::Scale, cur_, cur_}); }
  SpecBuilder& flatten() { return push({LayerKind::Flatten, cur_, {1, cur_.size()}}); }
  SpecBuilder& dropout(double rate) {
    LayerDesc d{LayerKind::Dropout, cur_, cur_};
    d.dropout = rate;
    return push(d);
  }
  SpecBuilder& fc(std::size_t units, Activation act) {
    if (units == 0) fail("FC layer with zero units");
    LayerDesc d{LayerKind::Fc, cur_, {1, units}};
    d.units = units;
    d.act = act;
    return push(d);
  }
  SpecBuilder& conv(std::size_t kernels, std::size_t len, ConvMode mode) {
    if (len == 0) fail("conv kernel length must be >= 1");
    const std::size_t out_ch = mode == ConvMode::Depthwise ? cur_.channels * kernels : kernels;
    LayerDesc d{LayerKind::Conv, cur_, {out_ch, cur_.length}};
    d.units = kernels;
    d.kernel_len = len;
    d.mode = mode;
    d.act = Activation::Relu;
    return push(d);
  }
  SpecBuilder& maxpool(std::size_t pool) {
    if (cur_.length < pool) {
      fail("segment of " + std::to_string(spec_.samples) +
           " samples too short for the max-pool stages");
    }
    LayerDesc d{LayerKind::MaxPool, cur_, {cur_.channels, cur_.length / pool}};
    d.pool = pool;
    return push(d);
  }
  SpecBuilder& bilstm(std::size_t hidden) {
    LayerDesc d{LayerKind::BiLstm, cur_, {1, 2 * hidden}};
    d.units = hidden;
    return push(d);
  }

  ModelSpec done() {
    spec_.validate();
    return std::move(spec_);
  }

 private:
  SpecBuilder& push(LayerDesc d) {
    cur_ = d.out;
    spec_.layers.push_back(d);
    return *this;
  }

  ModelSpec spec_;
  ActShape cur_;
};

void check_common(int fs, std::size_t channels, std::size_t samples) {
  if (fs < 4 || fs > 65535) fail("fs must be in [4, 65535]");
  if (channels < 1 || channels > 255) fail("channel count must be in [1, 255]");
  if (samples < 1) fail("segment must contain at least one sample");
}

ModelSpec dnn_spec(int fs, std::size_t k, std::size_t n) {
  check_common(fs, k, n);
  if (n % 8 != 0) fail("DNN segment length must be divisible by 8 for the FC pyramid");
  return SpecBuilder(Family::DNN, fs, k, n)
      .scale()
      .flatten()
      .dropout(0.5)
      .fc(n, Activation::Relu)
      .dropout(0.5)
      .fc(n / 2, Activation::Relu)
      .fc(n / 4, Activation::Relu)
      .fc(n / 8, Activation::Relu)
      .fc(kNumClasses, Activation::None)
      .done();
}

ModelSpec cnn_spec(int fs, std::size_t k, std::size_t n) {
  check_common(fs, k, n);
  const auto half = static_cast<std::size_t>(fs / 2);
  const auto quarter = static_cast<std::size_t>(fs / 4);
  return SpecBuilder(Family::CNN, fs, k, n)
      .scale()
      .conv(4, half, ConvMode::Depthwise)
      .maxpool(4)
      .dropout(0.25)
      .conv(4, half, ConvMode::Standard)
      .maxpool(4)
      .dropout(0.25)
      .conv(2, quarter, ConvMode::Standard)
      .maxpool(4)
      .flatten()
      .fc(32, Activation::Relu)
      .fc(16, Activation::Relu)
      .fc(kNumClasses, Activation::None)
      .done();
}

ModelSpec lstm_spec(int fs, std::size_t k, std::size_t n) {
  check_common(fs, k, n);
  return SpecBuilder(Family::LSTM, fs, k, n)
      .scale()
      .conv(1, static_cast<std::size_t>(fs / 2), ConvMode::Standard)
      .maxpool(4)
      .dropout(0.5)
      .bilstm(kLstmHidden)
      .fc(64, Activation::Relu)
      .fc(kNumClasses, Activation::None)
      .done();
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Float32-representable draw that stays inside [-r, r].
double draw(std::mt19937_64& rng, double r) {
  std::uniform_real_distribution<double> dist(-r, r);
  auto v = static_cast<float>(dist(rng));
  const auto fr = static_cast<float>(r);
  if (v > r) v = std::nextafter(fr, 0.0f);
  if (v < -r) v = -std::nextafter(fr, 0.0f);
  return v;
}

FloatTensor glorot(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                   std::mt19937_64& rng) {
  FloatTensor t(shape);
  const double r = glorot_bound(fan_in, fan_out);
  for (double& v : t.data) v = draw(rng, r);
  return t;
}

LstmCellWeights lstm_init(std::size_t in, std::size_t hid, std::mt19937_64& rng) {
  LstmCellWeights w;
  for (std::size_t g = 0; g < 4; ++g) w.wx[g] = glorot({hid, in}, in, hid, rng);
  for (std::size_t g = 0; g < 4; ++g) w.wh[g] = glorot({hid, hid}, hid, hid, rng);
  for (std::size_t g = 0; g < 4; ++g) w.b[g] = FloatTensor({hid});
  return w;
}

template <class T>
void check_shape(const T& t, const Shape& want, const char* what) {
  if (t.shape != want || t.data.size() != shape_size(want)) {
    throw Error(Errc::ShapeMismatch, std::string(what) + " tensor shape mismatch");
  }
}

template <class Fc, class Conv, class Bi>
void check_layer_params(const LayerDesc& layer, const std::variant<Fc, Conv, Bi>& params) {
  const std::vector<Shape> shapes = tensor_shapes(layer);
  switch (layer.kind) {
    case LayerKind::Fc: {
      const auto* p = std::get_if<Fc>(&params);
      if (!p) throw Error(Errc::ShapeMismatch, "expected FC coefficients");
      check_shape(p->w, shapes[0], "fc weight");
      check_shape(p->b, shapes[1], "fc bias");
      break;
    }
    case LayerKind::Conv: {
      const auto* p = std::get_if<Conv>(&params);
      if (!p) throw Error(Errc::ShapeMismatch, "expected conv coefficients");
      if (p->mode != layer.mode) throw Error(Errc::ShapeMismatch, "conv mode mismatch");
      check_shape(p->kernels, shapes[0], "conv kernel");
      check_shape(p->biases, shapes[1], "conv bias");
      break;
    }
    case LayerKind::BiLstm: {
      const auto* p = std::get_if<Bi>(&params);
      if (!p) throw Error(Errc::ShapeMismatch, "expected LSTM coefficients");
      std::size_t i = 0;
      for (const auto* cell : {&p->fwd, &p->bwd}) {
        for (const auto& t : cell->wx) check_shape(t, shapes[i++], "lstm wx");
        for (const auto& t : cell->wh) check_shape(t, shapes[i++], "lstm wh");
        for (const auto& t : cell->b) check_shape(t, shapes[i++], "lstm bias");
      }
      break;
    }
    default:
      break;
  }
}

}  // namespace

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::DNN: return "dnn";
    case Family::CNN: return "cnn";
    case Family::LSTM: return "lstm";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "dnn") return Family::DNN;
  if (lower == "cnn") return Family::CNN;
  if (lower == "lstm") return Family::LSTM;
  throw Error(Errc::InvalidArgument, "unknown model family '" + std::string(name) + "'");
}

std::string_view layer_kind_name(LayerKind k) noexcept {
  switch (k) {
    case LayerKind::Scale: return "scale";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Fc: return "fc";
    case LayerKind::Conv: return "conv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::BiLstm: return "bilstm";
  }
  return "unknown";
}

std::size_t ModelSpec::trainable_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(), [](const LayerDesc& l) { return l.trainable(); }));
}

void ModelSpec::validate() const {
  ActShape cur = input_shape();
  if (cur.size() == 0) fail("empty model input");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerDesc& l = layers[i];
    if (!(l.in == cur)) fail("layer " + std::to_string(i) + " input does not chain");
    ActShape expect = cur;
    switch (l.kind) {
      case LayerKind::Scale:
      case LayerKind::Dropout:
        break;
      case LayerKind::Flatten:
        expect = {1, cur.size()};
        break;
      case LayerKind::Fc:
        expect = {1, l.units};
        break;
      case LayerKind::Conv:
        expect = {l.mode == ConvMode::Depthwise ? cur.channels * l.units : l.units, cur.length};
        break;
      case LayerKind::MaxPool:
        if (l.pool == 0 || cur.length < l.pool) fail("max-pool longer than its input");
        expect = {cur.channels, cur.length / l.pool};
        break;
      case LayerKind::BiLstm:
        expect = {1, 2 * l.units};
        break;
    }
    if (!(l.out == expect)) fail("layer " + std::to_string(i) + " output shape inconsistent");
    cur = l.out;
  }
  if (!(cur == ActShape{1, kNumClasses})) fail("model head must output 3 classes");
}

std::size_t samples_for(int fs, double seg_seconds) {
  const double n = fs * seg_seconds;
  const double r = std::round(n);
  if (seg_seconds <= 0.0 || std::abs(n - r) > 1e-9 || r < 1.0) {
    fail("fs * seg_seconds must be a positive integer");
  }
  return static_cast<std::size_t>(r);
}

ModelSpec build_dnn(int fs, std::size_t channels, double seg_seconds) {
  return dnn_spec(fs, channels, samples_for(fs, seg_seconds));
}

ModelSpec build_cnn(int fs, std::size_t channels, double seg_seconds) {
  return cnn_spec(fs, channels, samples_for(fs, seg_seconds));
}

ModelSpec build_lstm(int fs, std::size_t channels, double seg_seconds) {
  return lstm_spec(fs, channels, samples_for(fs, seg_seconds));
}

ModelSpec build_model(Family family, int fs, std::size_t channels, std::size_t samples) {
  switch (family) {
    case Family::DNN: return dnn_spec(fs, channels, samples);
    case Family::CNN: return cnn_spec(fs, channels, samples);
    case Family::LSTM: return lstm_spec(fs, channels, samples);
  }
  fail("unknown family");
  return {};
}

std::vector<Shape> tensor_shapes(const LayerDesc& layer) {
  switch (layer.kind) {
    case LayerKind::Fc:
      return {{layer.units, layer.in.size()}, {layer.units}};
    case LayerKind::Conv:
      return {{layer.units, layer.mode == ConvMode::Depthwise ? 1 : layer.in.channels,
               layer.kernel_len},
              {layer.units}};
    case LayerKind::BiLstm: {
      std::vector<Shape> shapes;
      const std::size_t hid = layer.units;
      const std::size_t d = layer.in.channels;
      for (int dir = 0; dir < 2; ++dir) {
        for (int g = 0; g < 4; ++g) shapes.push_back({hid, d});
        for (int g = 0; g < 4; ++g) shapes.push_back({hid, hid});
        for (int g = 0; g < 4; ++g) shapes.push_back({hid});
      }
      return shapes;
    }
    default:
      return {};
  }
}

void WeightBundle::validate() const {
  spec.validate();
  const std::size_t n = spec.trainable_count();
  const std::size_t have =
      precision == Precision::Float32 ? float_params.size() : quant_params.size();
  if (have != n) {
    throw Error(Errc::ShapeMismatch, "bundle has " + std::to_string(have) +
                                         " parametric layers, spec needs " + std::to_string(n));
  }
  std::size_t p = 0;
  for (const LayerDesc& l : spec.layers) {
    if (!l.trainable()) continue;
    if (precision == Precision::Float32) {
      check_layer_params(l, float_params[p]);
    } else {
      check_layer_params(l, quant_params[p]);
    }
    ++p;
  }
}

bool operator==(const WeightBundle& a, const WeightBundle& b) {
  return a.spec == b.spec && a.precision == b.precision && a.float_params == b.float_params &&
         a.quant_params == b.quant_params;
}

WeightBundle init_weights(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  WeightBundle bundle;
  bundle.spec = spec;
  for (const LayerDesc& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::Fc: {
        const std::size_t in = l.in.size();
        bundle.float_params.emplace_back(
            FcWeights{glorot({l.units, in}, in, l.units, rng), FloatTensor({l.units})});
        break;
      }
      case LayerKind::Conv: {
        const std::size_t kc = l.mode == ConvMode::Depthwise ? 1 : l.in.channels;
        ConvWeights w{glorot({l.units, kc, l.kernel_len}, kc * l.kernel_len,
                             l.units * l.kernel_len, rng),
                      FloatTensor({l.units}), l.mode};
        bundle.float_params.emplace_back(std::move(w));
        break;
      }
      case LayerKind::BiLstm: {
        BiLstmWeights w;
        w.fwd = lstm_init(l.in.channels, l.units, rng);
        w.bwd = lstm_init(l.in.channels, l.units, rng);
        bundle.float_params.emplace_back(std::move(w));
        break;
      }
      default:
        break;
    }
  }
  return bundle;
}

WeightBundle zero_weights(const ModelSpec& spec) {
  WeightBundle bundle = init_weights(spec, 0);
  for (auto& p : bundle.float_params) {
    std::visit(
        [](auto& w) {
          using W = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<W, FcWeights>) {
            std::fill(w.w.data.begin(), w.w.data.end(), 0.0);
          } else if constexpr (std::is_same_v<W, ConvWeights>) {
            std::fill(w.kernels.data.begin(), w.kernels.data.end(), 0.0);
          } else {
            for (auto* cell : {&w.fwd, &w.bwd}) {
              for (auto& t : cell->wx) std::fill(t.data.begin(), t.data.end(), 0.0);
              for (auto& t : cell->wh) std::fill(t.data.begin(), t.data.end(), 0.0);
            }
          }
        },
        p);
  }
  return bundle;
}

// Inference ------------------------------------------------------------------

void InferenceWorkspace::prepare(const ModelSpec& spec, Precision precision) {
  std::size_t act = spec.input_shape().size();
  std::size_t pad = 0;
  std::size_t seq = 0;
  for (const LayerDesc& l : spec.layers) {
    act = std::max({act, l.in.size(), l.out.size()});
    if (l.kind == LayerKind::Conv) pad = std::max(pad, l.in.length + l.kernel_len - 1);
    if (l.kind == LayerKind::BiLstm) seq = std::max(seq, l.in.size());
  }
  // resize() keeps capacity, so steady-state calls do not allocate.
  fa_.resize(act);
  fb_.resize(act);
  fseq_.resize(seq);
  if (precision == Precision::Float32) {
    fpad_.resize(pad);
  } else {
    qa_.resize(act);
    qb_.resize(act);
    qpad_.resize(pad);
    qseq_.resize(seq);
    qacc_.resize(act);
  }
}

namespace {

InferenceResult run_float(const WeightBundle& b, std::span<const double> segment,
                          std::vector<double>& fa, std::vector<double>& fb,
                          std::vector<double>& pad, std::vector<double>& seq,
                          BiLstmScratch& lstm, MacCounter* counter) {
  double* src = fa.data();
  double* dst = fb.data();
  std::size_t p = 0;
  for (const LayerDesc& l : b.spec.layers) {
    const std::span<const double> in(src, l.in.size());
    const std::span<double> out(dst, l.out.size());
    bool swap = true;
    switch (l.kind) {
      case LayerKind::Scale:
        scale_forward(segment, l.in.channels, l.in.length, out);
        break;
      case LayerKind::Flatten:
      case LayerKind::Dropout:
        swap = false;
        break;
      case LayerKind::Fc:
        fc_forward(in, std::get<FcWeights>(b.float_params[p++]), l.act, out, counter);
        break;
      case LayerKind::Conv:
        conv1d_forward(in, l.in.channels, l.in.length, std::get<ConvWeights>(b.float_params[p++]),
                       l.act, out, pad, counter);
        break;
      case LayerKind::MaxPool:
        maxpool1d(in, l.in.channels, l.in.length, l.pool, out);
        break;
      case LayerKind::BiLstm: {
        // [d x T] -> [T x d]
        const std::size_t d = l.in.channels;
        const std::size_t steps = l.in.length;
        for (std::size_t c = 0; c < d; ++c) {
          for (std::size_t t = 0; t < steps; ++t) seq[t * d + c] = in[c * steps + t];
        }
        const auto& w = std::get<BiLstmWeights>(b.float_params[p++]);
        bilstm_forward(std::span<const double>(seq.data(), d * steps), steps, w.fwd, w.bwd, out,
                       lstm, counter);
        break;
      }
    }
    if (swap) std::swap(src, dst);
  }
  InferenceResult r;
  std::copy_n(src, kNumClasses, r.logits.begin());
  r.label = argmax_classify(r.logits);
  return r;
}

}  // namespace

InferenceResult infer_segment(const WeightBundle& b, std::span<const double> segment,
                              InferenceWorkspace& ws) {
  const ModelSpec& spec = b.spec;
  if (segment.size() != spec.input_shape().size()) {
    throw Error(Errc::ShapeMismatch, "segment has " + std::to_string(segment.size()) +
                                         " values, model expects " +
                                         std::to_string(spec.input_shape().size()));
  }
  ws.prepare(spec, b.precision);
  if (b.precision == Precision::Float32) {
    return run_float(b, segment, ws.fa_, ws.fb_, ws.fpad_, ws.fseq_, ws.lstm_, ws.counter);
  }

  // Activations enter in kActivationFormat; FC and conv layers may drop
  // fractional bits to keep their outputs in range.
  QFormat aq = kActivationFormat;
  SaturationCounter sat;
  std::int32_t* src = ws.qa_.data();
  std::int32_t* dst = ws.qb_.data();
  std::size_t p = 0;
  for (const LayerDesc& l : spec.layers) {
    const std::span<const std::int32_t> in(src, l.in.size());
    const std::span<std::int32_t> out(dst, l.out.size());
    bool swap = true;
    switch (l.kind) {
      case LayerKind::Scale: {
        const std::span<double> scaled(ws.fa_.data(), l.out.size());
        scale_forward(segment, l.in.channels, l.in.length, scaled);
        for (std::size_t i = 0; i < scaled.size(); ++i) out[i] = quantize_value(scaled[i], aq, sat);
        break;
      }
      case LayerKind::Flatten:
      case LayerKind::Dropout:
        swap = false;
        break;
      case LayerKind::Fc:
        aq = fc_forward_q(in, aq, std::get<QFcWeights>(b.quant_params[p++]), l.act, out,
                          ws.qacc_, sat, ws.counter);
        break;
      case LayerKind::Conv:
        aq = conv1d_forward_q(in, l.in.channels, l.in.length, aq,
                              std::get<QConvWeights>(b.quant_params[p++]), l.act, out, ws.qpad_,
                              ws.qacc_, sat, ws.counter);
        break;
      case LayerKind::MaxPool:
        maxpool1d_q(in, l.in.channels, l.in.length, l.pool, out);
        break;
      case LayerKind::BiLstm: {
        const std::size_t d = l.in.channels;
        const std::size_t steps = l.in.length;
        std::int32_t* seq = ws.qseq_.data();
        const QFormat lq = kActivationFormat;
        for (std::size_t c = 0; c < d; ++c) {
          for (std::size_t t = 0; t < steps; ++t) {
            const std::int64_t v = std::int64_t{in[c * steps + t]} << (lq.frac_bits - aq.frac_bits);
            seq[t * d + c] = static_cast<std::int32_t>(saturate(v, lq, sat));
          }
        }
        aq = lq;
        const auto& w = std::get<QBiLstmWeights>(b.quant_params[p++]);
        bilstm_forward_q(std::span<const std::int32_t>(seq, d * steps), steps, lq, w.fwd, w.bwd,
                         out, ws.qlstm_, sat, ws.counter);
        break;
      }
    }
    if (swap) std::swap(src, dst);
  }
  InferenceResult r;
  for (std::size_t i = 0; i < kNumClasses; ++i) r.logits[i] = dequantize_value(src[i], aq);
  r.label = argmax_classify(r.logits);
  r.saturations = sat.count;
  return r;
}

InferenceResult infer_segment(const WeightBundle& bundle, const FloatTensor& segment) {
  InferenceWorkspace ws;
  return infer_segment(bundle, segment.data, ws);
}

}  // namespace edgeseizure
