// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "edgeseizure/error.hpp"

namespace edgeseizure {
namespace {

template <class Fn>
void visit_tensors(FloatLayerParams& layer, Fn&& fn) {
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FcWeights>) {
          fn(p.w);
          fn(p.b);
        } else if constexpr (std::is_same_v<P, ConvWeights>) {
          fn(p.kernels);
          fn(p.biases);
        } else {
          for (auto* cell : {&p.fwd, &p.bwd}) {
            for (auto& t : cell->wx) fn(t);
            for (auto& t : cell->wh) fn(t);
            for (auto& t : cell->b) fn(t);
          }
        }
      },
      layer);
}

// Activations of one forward pass plus scratch for the backward pass.
struct Tape {
  std::vector<std::vector<double>> acts;   // acts[i] = output of layer i
  std::vector<std::vector<double>> masks;  // per layer, dropout only
  std::vector<double> pad;
  std::vector<double> dpad;
  std::vector<double> ga;
  std::vector<double> gb;
};

void fc_backward(std::span<const double> x, std::span<const double> y, const FcWeights& w,
                 Activation act, std::span<double> dy, FcWeights& grad, std::span<double> dx) {
  const std::size_t out = w.w.shape[0];
  const std::size_t in = w.w.shape[1];
  if (act == Activation::Relu) {
    for (std::size_t o = 0; o < out; ++o) {
      if (!(y[o] > 0.0)) dy[o] = 0.0;
    }
  }
  for (std::size_t o = 0; o < out; ++o) {
    const double g = dy[o];
    grad.b.data[o] += g;
    if (g == 0.0) continue;
    double* gw = grad.w.data.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) gw[i] += g * x[i];
  }
  if (dx.empty()) return;
  std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double g = dy[o];
    if (g == 0.0) continue;
    const double* wr = w.w.data.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) dx[i] += g * wr[i];
  }
}

void conv_backward(std::span<const double> x, std::size_t in_ch, std::size_t len,
                   std::span<const double> y, const ConvWeights& w, Activation act,
                   std::span<double> dy, ConvWeights& grad, std::span<double> dx,
                   std::vector<double>& pad, std::vector<double>& dpad) {
  const std::size_t kernels = w.kernels.shape[0];
  const std::size_t h = w.kernels.shape[2];
  const std::size_t left = same_pad_left(h);
  const std::size_t plen = len + h - 1;
  pad.assign(plen, 0.0);
  dpad.assign(plen, 0.0);
  if (act == Activation::Relu) {
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (!(y[i] > 0.0)) dy[i] = 0.0;
    }
  }
  const bool depthwise = w.mode == ConvMode::Depthwise;
  const double* kdata = w.kernels.data.data();
  double* gk = grad.kernels.data.data();
  for (std::size_t c = 0; c < in_ch; ++c) {
    std::fill(pad.begin(), pad.end(), 0.0);
    std::copy_n(x.data() + c * len, len, pad.begin() + static_cast<std::ptrdiff_t>(left));
    std::fill(dpad.begin(), dpad.end(), 0.0);
    for (std::size_t o = 0; o < kernels; ++o) {
      const double* g = dy.data() + (depthwise ? c * kernels + o : o) * len;
      const std::size_t koff = depthwise ? o * h : (o * in_ch + c) * h;
      for (std::size_t k = 0; k < h; ++k) {
        const double* src = pad.data() + k;
        double acc = 0.0;
        for (std::size_t t = 0; t < len; ++t) acc += g[t] * src[t];
        gk[koff + k] += acc;
        const double wk = kdata[koff + k];
        double* dst = dpad.data() + k;
        for (std::size_t t = 0; t < len; ++t) dst[t] += wk * g[t];
      }
      if (depthwise || c == 0) {
        double s = 0.0;
        for (std::size_t t = 0; t < len; ++t) s += g[t];
        grad.biases.data[o] += s;
      }
    }
    if (!dx.empty()) std::copy_n(dpad.begin() + static_cast<std::ptrdiff_t>(left), len, dx.begin() + static_cast<std::ptrdiff_t>(c * len));
  }
}

void maxpool_backward(std::span<const double> x, std::size_t channels, std::size_t len,
                      std::size_t pool, std::span<const double> dy, std::span<double> dx) {
  const std::size_t out_len = len / pool;
  std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < out_len; ++t) {
      const double* win = x.data() + c * len + t * pool;
      std::size_t best = 0;
      for (std::size_t k = 1; k < pool; ++k) {
        if (win[k] > win[best]) best = k;
      }
      dx[c * len + t * pool + best] += dy[c * out_len + t];
    }
  }
}

double run_backward(const WeightBundle& b, std::span<const double> segment, Label label,
                    const std::array<double, kNumClasses>& weights,
                    std::optional<std::uint64_t> dropout_seed, Tape& tape, ParamSet& grads,
                    std::array<double, kNumClasses>* logits_out) {
  const auto& layers = b.spec.layers;
  const std::size_t n = layers.size();
  tape.acts.resize(n);
  tape.masks.resize(n);
  std::mt19937_64 rng(dropout_seed.value_or(0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Forward, keeping every layer output.
  std::vector<std::size_t> param_index(n, 0);
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const LayerDesc& l = layers[i];
    auto& out = tape.acts[i];
    out.resize(l.out.size());
    const std::span<const double> in =
        i == 0 ? segment : std::span<const double>(tape.acts[i - 1]);
    switch (l.kind) {
      case LayerKind::Scale:
        scale_forward(segment, l.in.channels, l.in.length, out);
        break;
      case LayerKind::Flatten:
        std::copy(in.begin(), in.end(), out.begin());
        break;
      case LayerKind::Dropout: {
        auto& mask = tape.masks[i];
        mask.assign(in.size(), 1.0);
        if (dropout_seed && l.dropout > 0.0) {
          const double keep = 1.0 - l.dropout;
          for (double& m : mask) m = unit(rng) < keep ? 1.0 / keep : 0.0;
        }
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] * mask[k];
        break;
      }
      case LayerKind::Fc:
        param_index[i] = p;
        fc_forward(in, std::get<FcWeights>(b.float_params[p++]), l.act, out);
        break;
      case LayerKind::Conv:
        param_index[i] = p;
        tape.pad.resize(l.in.length + l.kernel_len - 1);
        conv1d_forward(in, l.in.channels, l.in.length, std::get<ConvWeights>(b.float_params[p++]),
                       l.act, out, tape.pad);
        break;
      case LayerKind::MaxPool:
        maxpool1d(in, l.in.channels, l.in.length, l.pool, out);
        break;
      case LayerKind::BiLstm:
        throw Error(Errc::UnsupportedFamily, "LSTM layers have no backward pass");
    }
  }

  std::array<double, kNumClasses> logits{};
  std::copy_n(tape.acts[n - 1].begin(), kNumClasses, logits.begin());
  if (logits_out) *logits_out = logits;
  const LossAndGradient lg = weighted_cross_entropy(logits, label, weights);

  // Backward down to (not into) the scaling layer.
  tape.ga.assign(lg.grad.begin(), lg.grad.end());
  for (std::size_t i = n; i-- > 1;) {
    const LayerDesc& l = layers[i];
    if (layers[i - 1].kind == LayerKind::Scale && !l.trainable()) break;
    const std::span<const double> x(tape.acts[i - 1]);
    const bool need_dx = layers[i - 1].kind != LayerKind::Scale;
    tape.gb.assign(need_dx ? l.in.size() : 0, 0.0);
    switch (l.kind) {
      case LayerKind::Scale:
        break;
      case LayerKind::Flatten:
        tape.gb.assign(tape.ga.begin(), tape.ga.end());
        break;
      case LayerKind::Dropout:
        for (std::size_t k = 0; k < tape.gb.size(); ++k) tape.gb[k] = tape.ga[k] * tape.masks[i][k];
        break;
      case LayerKind::Fc:
        fc_backward(x, tape.acts[i], std::get<FcWeights>(b.float_params[param_index[i]]), l.act,
                    tape.ga, std::get<FcWeights>(grads[param_index[i]]), tape.gb);
        break;
      case LayerKind::Conv:
        conv_backward(x, l.in.channels, l.in.length, tape.acts[i],
                      std::get<ConvWeights>(b.float_params[param_index[i]]), l.act, tape.ga,
                      std::get<ConvWeights>(grads[param_index[i]]), tape.gb, tape.pad, tape.dpad);
        break;
      case LayerKind::MaxPool:
        maxpool_backward(x, l.in.channels, l.in.length, l.pool, tape.ga, tape.gb);
        break;
      case LayerKind::BiLstm:
        break;
    }
    if (!need_dx) break;
    std::swap(tape.ga, tape.gb);
  }
  return lg.loss;
}

void require_trainable(const WeightBundle& b) {
  if (b.spec.family == Family::LSTM) {
    throw Error(Errc::UnsupportedFamily, "training is available for DNN and CNN models only");
  }
  if (b.precision != Precision::Float32) {
    throw Error(Errc::InvalidArgument, "backward needs a float bundle");
  }
}

void add_into(ParamSet& dst, const ParamSet& src) {
  auto d = tensor_refs(dst);
  auto s = tensor_refs(src);
  for (std::size_t k = 0; k < d.size(); ++k) {
    auto& dv = d[k]->data;
    const auto& sv = s[k]->data;
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += sv[i];
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

}  // namespace

void TrainConfig::validate() const {
  auto check = [](bool ok, const char* field) {
    if (!ok) throw Error(Errc::InvalidArgument, std::string("train field '") + field + "' out of range");
  };
  check(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate");
  check(beta1 > 0.0 && beta1 < 1.0, "beta1");
  check(beta2 > 0.0 && beta2 < 1.0, "beta2");
  check(epsilon > 0.0, "epsilon");
  check(epochs >= 1, "epochs");
  check(batch_size >= 1, "batch_size");
  for (double w : class_weights) check(w > 0.0 && std::isfinite(w), "class_weights");
}

std::array<double, kNumClasses> class_weights(const std::array<std::size_t, kNumClasses>& counts) {
  std::size_t total = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0) {
      throw Error(Errc::MissingClass,
                  "no " + std::string(label_name(static_cast<Label>(c))) + " segments");
    }
    total += counts[c];
  }
  std::array<double, kNumClasses> w{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    w[c] = static_cast<double>(total) / (3.0 * static_cast<double>(counts[c]));
  }
  return w;
}

LossAndGradient weighted_cross_entropy(const std::array<double, kNumClasses>& logits, Label label,
                                       const std::array<double, kNumClasses>& weights) noexcept {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  std::array<double, kNumClasses> e{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    e[c] = std::exp(logits[c] - peak);
    denom += e[c];
  }
  const auto y = static_cast<std::size_t>(label);
  const double w = weights[y];
  LossAndGradient r;
  r.loss = w * (std::log(denom) - (logits[y] - peak));
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    r.grad[c] = w * (e[c] / denom - (c == y ? 1.0 : 0.0));
  }
  return r;
}

std::vector<FloatTensor*> tensor_refs(ParamSet& params) {
  std::vector<FloatTensor*> out;
  for (auto& layer : params) visit_tensors(layer, [&](FloatTensor& t) { out.push_back(&t); });
  return out;
}

std::vector<const FloatTensor*> tensor_refs(const ParamSet& params) {
  std::vector<const FloatTensor*> out;
  for (FloatTensor* t : tensor_refs(const_cast<ParamSet&>(params))) out.push_back(t);
  return out;
}

ParamSet zeros_like(const ParamSet& params) {
  ParamSet out = params;
  for (FloatTensor* t : tensor_refs(out)) std::fill(t->data.begin(), t->data.end(), 0.0);
  return out;
}

BackwardResult backward(const WeightBundle& bundle, std::span<const double> segment, Label label,
                        const std::array<double, kNumClasses>& weights,
                        std::optional<std::uint64_t> dropout_seed) {
  require_trainable(bundle);
  if (segment.size() != bundle.spec.input_shape().size()) {
    throw Error(Errc::ShapeMismatch, "segment size does not match the model input");
  }
  BackwardResult r;
  r.grads = zeros_like(bundle.float_params);
  Tape tape;
  r.loss = run_backward(bundle, segment, label, weights, dropout_seed, tape, r.grads, &r.logits);
  return r;
}

AdamState adam_init(const ParamSet& params) {
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  return s;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const TrainConfig& cfg) {
  auto p = tensor_refs(params);
  auto g = tensor_refs(grads);
  auto m = tensor_refs(state.m);
  auto v = tensor_refs(state.v);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw Error(Errc::ShapeMismatch, "adam: parameter and gradient sets differ");
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k]->shape != p[k]->shape || m[k]->shape != p[k]->shape || v[k]->shape != p[k]->shape) {
      throw Error(Errc::ShapeMismatch, "adam: tensor " + std::to_string(k) + " shape differs");
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto& pd = p[k]->data;
    const auto& gd = g[k]->data;
    auto& md = m[k]->data;
    auto& vd = v[k]->data;
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = cfg.beta1 * md[i] + (1.0 - cfg.beta1) * gd[i];
      vd[i] = cfg.beta2 * vd[i] + (1.0 - cfg.beta2) * gd[i] * gd[i];
      pd[i] -= cfg.learning_rate * (md[i] / c1) / (std::sqrt(vd[i] / c2) + cfg.epsilon);
    }
  }
}

TrainResult train_model(const ModelSpec& spec, std::span<const Segment> segments,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (spec.family == Family::LSTM) {
    throw Error(Errc::UnsupportedFamily, "training is available for DNN and CNN models only");
  }
  const auto counts = class_counts(segments);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0) {
      throw Error(Errc::MissingClass,
                  "no " + std::string(label_name(static_cast<Label>(c))) + " segments to train on");
    }
  }
  const std::size_t in_size = spec.input_shape().size();
  for (const Segment& s : segments) {
    if (s.data.size() != in_size) throw Error(Errc::ShapeMismatch, "segment size does not match the model input");
  }

  TrainResult result;
  result.class_weights = cfg.balance_classes ? class_weights(counts) : cfg.class_weights;
  WeightBundle bundle = init_weights(spec, cfg.rng_seed);
  AdamState adam = adam_init(bundle.float_params);

  std::size_t workers = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  workers = std::min(workers, cfg.batch_size);
  std::vector<Tape> tapes(workers);
  std::vector<ParamSet> slots(cfg.batch_size, zeros_like(bundle.float_params));
  std::vector<double> losses(cfg.batch_size, 0.0);
  ParamSet batch_grad = zeros_like(bundle.float_params);

  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(cfg.rng_seed);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      auto work = [&](std::size_t w) {
        for (std::size_t j = w; j < count; j += workers) {
          const std::size_t pos = start + j;
          const Segment& s = segments[order[pos]];
          for (FloatTensor* t : tensor_refs(slots[j])) std::fill(t->data.begin(), t->data.end(), 0.0);
          losses[j] = run_backward(bundle, s.data.data, s.label, result.class_weights,
                                   mix_seed(cfg.rng_seed, epoch, pos), tapes[w], slots[j], nullptr);
        }
      };
      if (workers == 1 || count == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
        work(0);
        for (auto& t : pool) t.join();
      }
      for (FloatTensor* t : tensor_refs(batch_grad)) std::fill(t->data.begin(), t->data.end(), 0.0);
      for (std::size_t j = 0; j < count; ++j) {
        add_into(batch_grad, slots[j]);
        epoch_loss += losses[j];
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (FloatTensor* t : tensor_refs(batch_grad)) {
        for (double& v : t->data) v *= inv;
      }
      adam_step(bundle.float_params, batch_grad, adam, cfg);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(segments.size()));
  }
  for (FloatTensor* t : tensor_refs(bundle.float_params)) {
    for (double& v : t->data) v = static_cast<double>(static_cast<float>(v));
  }
  result.bundle = std::move(bundle);
  return result;
}

}  // namespace edgeseizure
