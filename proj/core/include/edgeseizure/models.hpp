// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <variant>
#include <vector>

#include "edgeseizure/layers.hpp"
#include "edgeseizure/qtensor.hpp"

namespace edgeseizure {

enum class Family : std::uint8_t { DNN = 0, CNN = 1, LSTM = 2 };

std::string_view family_name(Family f) noexcept;
/// Accepts "dnn", "cnn", "lstm" (any case); throws InvalidArgument otherwise.
Family parse_family(std::string_view name);

enum class LayerKind : std::uint8_t { Scale, Flatten, Dropout, Fc, Conv, MaxPool, BiLstm };

std::string_view layer_kind_name(LayerKind k) noexcept;

/// Activations flowing between layers are [channels x length] matrices; a
/// flat vector is one channel.
struct ActShape {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::size_t size() const noexcept { return channels * length; }
  friend bool operator==(const ActShape&, const ActShape&) = default;
};

struct LayerDesc {
  LayerKind kind = LayerKind::Scale;
  ActShape in;
  ActShape out;
  Activation act = Activation::None;
  double dropout = 0.0;         // Dropout
  std::size_t units = 0;        // Fc outputs, Conv kernels, BiLstm hidden size
  std::size_t kernel_len = 0;   // Conv
  ConvMode mode = ConvMode::Standard;
  std::size_t pool = 0;         // MaxPool

  bool trainable() const noexcept {
    return kind == LayerKind::Fc || kind == LayerKind::Conv || kind == LayerKind::BiLstm;
  }
  friend bool operator==(const LayerDesc&, const LayerDesc&) = default;
};

struct ModelSpec {
  Family family = Family::DNN;
  int fs = 256;
  std::size_t channels = 0;  // K
  std::size_t samples = 0;   // N
  std::vector<LayerDesc> layers;

  ActShape input_shape() const noexcept { return {channels, samples}; }
  std::size_t trainable_count() const noexcept;
  /// Throws InvalidArgument when layer shapes do not chain or the head is not 3-way.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Pyramid DNN: scale, flatten, dropout .5, FC(N), dropout .5, FC(N/2),
/// FC(N/4), FC(N/8), FC(3).
ModelSpec build_dnn(int fs, std::size_t channels = 5, double seg_seconds = 0.5);
/// Depthwise conv (4 x fs/2), two standard convs (4 x fs/2, 2 x fs/4), each
/// followed by max-pool 4; FC(32), FC(16), FC(3).
ModelSpec build_cnn(int fs, std::size_t channels = 9, double seg_seconds = 1.0);

inline constexpr std::size_t kLstmHidden = 128;

/// Conv (1 x fs/2), max-pool 4, dropout .5, BiLSTM(128), FC(64), FC(3).
ModelSpec build_lstm(int fs, std::size_t channels = 9, double seg_seconds = 2.0);

/// Builder keyed by family and segment length in samples.
ModelSpec build_model(Family family, int fs, std::size_t channels, std::size_t samples);

std::size_t samples_for(int fs, double seg_seconds);

enum class Precision : std::uint8_t { Float32 = 0, Quantized = 1 };

using FloatLayerParams = std::variant<FcWeights, ConvWeights, BiLstmWeights>;
using QuantLayerParams = std::variant<QFcWeights, QConvWeights, QBiLstmWeights>;

/// Coefficients for every trainable layer of `spec`, in layer order.
/// Float bundles hold values representable in float32 so weight files
/// round-trip exactly.
struct WeightBundle {
  ModelSpec spec;
  Precision precision = Precision::Float32;
  std::vector<FloatLayerParams> float_params;
  std::vector<QuantLayerParams> quant_params;

  /// Throws ShapeMismatch when a tensor disagrees with the spec.
  void validate() const;
};

bool operator==(const WeightBundle& a, const WeightBundle& b);

/// Expected tensor shapes of one trainable layer, in serialization order.
std::vector<Shape> tensor_shapes(const LayerDesc& layer);

/// Glorot-uniform coefficients in [-r, r], r = sqrt(6 / (fan_in + fan_out));
/// zero biases. Deterministic per seed.
WeightBundle init_weights(const ModelSpec& spec, std::uint64_t seed);

/// All-zero float bundle.
WeightBundle zero_weights(const ModelSpec& spec);

struct InferenceResult {
  Label label = Label::Ictal;
  std::array<double, kNumClasses> logits{};
  std::size_t saturations = 0;
};

/// Caller-owned scratch for `infer_segment`; buffers grow on first use and
/// are reused afterwards.
class InferenceWorkspace {
 public:
  /// When set, conv/fc/lstm multiplies are tallied here.
  MacCounter* counter = nullptr;

 private:
  friend InferenceResult infer_segment(const WeightBundle&, std::span<const double>,
                                       InferenceWorkspace&);
  void prepare(const ModelSpec& spec, Precision precision);

  std::vector<double> fa_, fb_, fpad_, fseq_;
  std::vector<std::int32_t> qa_, qb_, qpad_, qseq_;
  std::vector<std::int64_t> qacc_;
  BiLstmScratch lstm_;
  QBiLstmScratch qlstm_;
};

/// Deterministic forward pass (dropout is identity). `segment` is row-major
/// [K x N].
InferenceResult infer_segment(const WeightBundle& bundle, std::span<const double> segment,
                              InferenceWorkspace& ws);
InferenceResult infer_segment(const WeightBundle& bundle, const FloatTensor& segment);

// Weight files ---------------------------------------------------------------

void save_weights(const WeightBundle& bundle, const std::filesystem::path& path);
WeightBundle load_weights(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_weights(const WeightBundle& bundle);
WeightBundle deserialize_weights(std::span<const std::uint8_t> bytes);

}  // namespace edgeseizure
