// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "edgeseizure/data.hpp"
#include "edgeseizure/models.hpp"

namespace edgeseizure {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::array<double, kNumClasses> class_weights{1.0, 1.0, 1.0};
  /// Replace class_weights with the inverse-frequency weights of the data.
  bool balance_classes = true;
  std::uint64_t rng_seed = 0;
  /// Worker threads for per-sample gradients; 0 picks the hardware count.
  /// Results do not depend on this value.
  std::size_t threads = 1;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

/// w_c = total / (3 * count_c). Throws MissingClass on a zero count.
std::array<double, kNumClasses> class_weights(const std::array<std::size_t, kNumClasses>& counts);

struct LossAndGradient {
  double loss = 0.0;
  std::array<double, kNumClasses> grad{};
};

/// weights[label] * softmax cross-entropy, with its gradient w.r.t. logits.
LossAndGradient weighted_cross_entropy(const std::array<double, kNumClasses>& logits, Label label,
                                       const std::array<double, kNumClasses>& weights) noexcept;

/// Per-layer coefficient tensors in bundle order (also used for gradients).
using ParamSet = std::vector<FloatLayerParams>;

/// Tensors of a ParamSet in serialization order.
std::vector<FloatTensor*> tensor_refs(ParamSet& params);
std::vector<const FloatTensor*> tensor_refs(const ParamSet& params);

/// Same structure, all zeros.
ParamSet zeros_like(const ParamSet& params);

struct BackwardResult {
  double loss = 0.0;
  std::array<double, kNumClasses> logits{};
  ParamSet grads;
};

/// Loss gradient for one labeled segment. With a dropout seed, dropout
/// layers draw an inverted-dropout mask from it; without one they are
/// identity. Scaling is treated as fixed preprocessing. Max-pool routes the
/// gradient to the first maximum. Throws UnsupportedFamily for LSTM bundles.
BackwardResult backward(const WeightBundle& bundle, std::span<const double> segment, Label label,
                        const std::array<double, kNumClasses>& class_weights,
                        std::optional<std::uint64_t> dropout_seed = std::nullopt);

struct AdamState {
  ParamSet m;
  ParamSet v;
  std::size_t t = 0;  // steps taken
};

AdamState adam_init(const ParamSet& params);

/// One bias-corrected Adam update; increments state.t first.
/// Throws ShapeMismatch when the sets disagree.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const TrainConfig& cfg);

struct TrainResult {
  WeightBundle bundle;
  std::vector<double> loss_curve;  // mean weighted loss per epoch
  std::array<double, kNumClasses> class_weights{};
};

/// Mini-batch Adam from a seeded Glorot start. Batch gradients are the mean
/// of per-sample gradients summed in a fixed order. Final coefficients are
/// rounded to float32.
TrainResult train_model(const ModelSpec& spec, std::span<const Segment> segments,
                        const TrainConfig& cfg);

}  // namespace edgeseizure
