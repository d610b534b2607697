// SPDX-License-Identifier: Apache-2.0
#include <zlib.h>

#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "edgeseizure/models.hpp"

namespace edgeseizure {
namespace detail {

void ByteWriter::put_crc() { put<std::uint32_t>(crc32_of(bytes_)); }

void ByteReader::expect_crc() {
  if (remaining() < 4) throw Error(Errc::TruncatedFile, "missing CRC32 trailer");
  if (remaining() > 4) throw Error(Errc::BadHeader, "trailing bytes after payload");
  const std::uint32_t want = crc32_of(bytes_.first(pos_));
  if (get<std::uint32_t>() != want) throw Error(Errc::ChecksumMismatch, "CRC32 mismatch");
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(
      crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

}  // namespace detail

namespace {

using detail::ByteReader;
using detail::ByteWriter;

constexpr char kMagic[4] = {'E', 'D', 'L', '1'};
constexpr std::uint16_t kVersion = 1;

void put_dims(ByteWriter& w, const Shape& shape) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
}

void put_tensor(ByteWriter& w, const FloatTensor& t) {
  put_dims(w, t.shape);
  for (double v : t.data) w.put<float>(static_cast<float>(v));
}

void put_tensor(ByteWriter& w, const QuantTensor& t) {
  if (t.q.total_bits != 8) {
    throw Error(Errc::InvalidArgument, "weight files store 8-bit coefficients only");
  }
  put_dims(w, t.shape);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(t.q.frac_bits));
  for (std::int32_t v : t.data) w.put<std::int8_t>(static_cast<std::int8_t>(v));
}

Shape get_dims(ByteReader& r, const Shape& expect) {
  const auto rank = r.get<std::uint8_t>();
  Shape shape(rank);
  for (auto& d : shape) d = r.get<std::uint32_t>();
  if (shape != expect) throw Error(Errc::ShapeMismatch, "tensor dims disagree with model spec");
  return shape;
}

template <class T>
T get_tensor(ByteReader& r, const Shape& expect);

template <>
FloatTensor get_tensor<FloatTensor>(ByteReader& r, const Shape& expect) {
  FloatTensor t(get_dims(r, expect));
  for (double& v : t.data) v = r.get<float>();
  return t;
}

template <>
QuantTensor get_tensor<QuantTensor>(ByteReader& r, const Shape& expect) {
  QuantTensor t;
  t.shape = get_dims(r, expect);
  const auto frac = r.get<std::uint8_t>();
  if (frac >= 8) throw Error(Errc::BadHeader, "frac_bits out of range for 8-bit tensor");
  t.q = QFormat{8, frac};
  t.data.resize(shape_size(t.shape));
  for (auto& v : t.data) v = r.get<std::int8_t>();
  return t;
}

template <class T>
void put_params(ByteWriter& w, const FcParams<T>& p) {
  put_tensor(w, p.w);
  put_tensor(w, p.b);
}

template <class T>
void put_params(ByteWriter& w, const ConvParams<T>& p) {
  put_tensor(w, p.kernels);
  put_tensor(w, p.biases);
}

template <class T>
void put_params(ByteWriter& w, const BiLstmParams<T>& p) {
  for (const auto* cell : {&p.fwd, &p.bwd}) {
    for (const auto& t : cell->wx) put_tensor(w, t);
    for (const auto& t : cell->wh) put_tensor(w, t);
    for (const auto& t : cell->b) put_tensor(w, t);
  }
}

template <class T, class Variant>
Variant get_layer(ByteReader& r, const LayerDesc& layer) {
  const std::vector<Shape> shapes = tensor_shapes(layer);
  switch (layer.kind) {
    case LayerKind::Fc: {
      FcParams<T> p;
      p.w = get_tensor<T>(r, shapes[0]);
      p.b = get_tensor<T>(r, shapes[1]);
      return p;
    }
    case LayerKind::Conv: {
      ConvParams<T> p;
      p.kernels = get_tensor<T>(r, shapes[0]);
      p.biases = get_tensor<T>(r, shapes[1]);
      p.mode = layer.mode;
      return p;
    }
    default: {
      BiLstmParams<T> p;
      std::size_t i = 0;
      for (auto* cell : {&p.fwd, &p.bwd}) {
        for (auto& t : cell->wx) t = get_tensor<T>(r, shapes[i++]);
        for (auto& t : cell->wh) t = get_tensor<T>(r, shapes[i++]);
        for (auto& t : cell->b) t = get_tensor<T>(r, shapes[i++]);
      }
      return p;
    }
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const WeightBundle& bundle) {
  bundle.validate();
  const ModelSpec& spec = bundle.spec;
  ByteWriter w;
  for (char c : kMagic) w.put<char>(c);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(spec.family));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(spec.fs));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(spec.channels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.samples));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(bundle.precision));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(spec.trainable_count()));
  if (bundle.precision == Precision::Float32) {
    for (const auto& p : bundle.float_params) std::visit([&](const auto& v) { put_params(w, v); }, p);
  } else {
    for (const auto& p : bundle.quant_params) std::visit([&](const auto& v) { put_params(w, v); }, p);
  }
  w.put_crc();
  return std::move(w.bytes());
}

WeightBundle deserialize_weights(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.get_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw Error(Errc::BadMagic, "not an EDL1 weight file");
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) {
    throw Error(Errc::UnsupportedVersion, "weight file version " + std::to_string(version));
  }
  const auto family = r.get<std::uint8_t>();
  const auto fs = r.get<std::uint16_t>();
  const auto channels = r.get<std::uint8_t>();
  const auto samples = r.get<std::uint32_t>();
  const auto precision = r.get<std::uint8_t>();
  const auto layer_count = r.get<std::uint16_t>();
  if (family > 2) throw Error(Errc::BadHeader, "family code " + std::to_string(family));
  if (precision > 1) throw Error(Errc::BadHeader, "precision code " + std::to_string(precision));

  WeightBundle b;
  try {
    b.spec = build_model(static_cast<Family>(family), fs, channels, samples);
  } catch (const Error& e) {
    throw Error(Errc::BadHeader, e.what());
  }
  b.precision = static_cast<Precision>(precision);
  if (layer_count != b.spec.trainable_count()) {
    throw Error(Errc::ShapeMismatch, "layer_count " + std::to_string(layer_count) +
                                         " does not match the model family");
  }
  for (const LayerDesc& l : b.spec.layers) {
    if (!l.trainable()) continue;
    if (b.precision == Precision::Float32) {
      b.float_params.push_back(get_layer<FloatTensor, FloatLayerParams>(r, l));
    } else {
      b.quant_params.push_back(get_layer<QuantTensor, QuantLayerParams>(r, l));
    }
  }
  r.expect_crc();
  return b;
}

void save_weights(const WeightBundle& bundle, const std::filesystem::path& path) {
  detail::write_file(path, serialize_weights(bundle));
}

WeightBundle load_weights(const std::filesystem::path& path) {
  return deserialize_weights(detail::read_file(path));
}

}  // namespace edgeseizure
