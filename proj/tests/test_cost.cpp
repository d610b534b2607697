// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <array>
#include <random>
#include <sstream>

#include "edgeseizure/cost.hpp"
#include "edgeseizure/quantizer.hpp"
#include "edgeseizure/trainer.hpp"
#include "test_support.hpp"

namespace es = edgeseizure;

TEST(Cost, MacFormulaExamples) {
  EXPECT_EQ(es::mac_fc(8, 3), 24u);
  EXPECT_EQ(es::mac_fc(1, 1), 1u);
  EXPECT_EQ(es::mac_fc(640, 128), 81920u);
  EXPECT_EQ(es::mac_conv(9, 256, 1, 4, 128, 1), 1179648u);
  EXPECT_EQ(es::mac_conv(36, 64, 1, 4, 128, 1), 1179648u);
  EXPECT_EQ(es::mac_conv(4, 16, 1, 2, 64, 1), 8192u);
  EXPECT_EQ(es::mac_lstm(2, 128, 64), 4u * (2 * 128 + 128 * 128) * 64);
}

TEST(CostProperty, MacConvMultiplicative) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    std::array<std::uint64_t, 6> a;
    for (auto& x : a) x = 1 + rng() % 50;
    const auto base = es::mac_conv(a[0], a[1], a[2], a[3], a[4], a[5]);
    for (int k = 0; k < 6; ++k) {
      auto b = a;
      b[k] *= 3;
      EXPECT_EQ(es::mac_conv(b[0], b[1], b[2], b[3], b[4], b[5]), 3 * base);
    }
  }
}

TEST(Cost, DefaultModelAnchors) {
  const auto cnn = es::model_cost(es::build_cnn(256));
  EXPECT_EQ(cnn.conv_macs, 2367488u);
  // Flattened 2 x 4 maps feed FC(32), FC(16), FC(3).
  EXPECT_EQ(cnn.fc_macs, 8u * 32 + 32 * 16 + 16 * 3);
  EXPECT_NEAR(static_cast<double>(cnn.conv_fc_macs()), 2.4e6, 0.05 * 2.4e6);
  EXPECT_EQ(cnn.lstm_macs, 0u);
  EXPECT_EQ(cnn.layers.size(), es::build_cnn(256).layers.size());

  const auto dnn = es::model_cost(es::build_dnn(256));
  EXPECT_EQ(dnn.fc_macs, 92720u);
  EXPECT_EQ(dnn.conv_macs, 0u);

  const auto lstm = es::model_cost(es::build_lstm(256));
  EXPECT_GT(lstm.lstm_macs, 0u);
  EXPECT_EQ(lstm.total_macs(), lstm.conv_fc_macs() + lstm.lstm_macs);

  const auto none = es::model_cost(es::ModelSpec{});
  EXPECT_EQ(none.total_macs(), 0u);
  EXPECT_EQ(none.weight_bytes, 0u);
}

TEST(Cost, WeightBytesHalveAtEightBits) {
  for (auto spec : {es::build_dnn(256), es::build_cnn(256), es::build_lstm(256)}) {
    const auto q8 = es::model_cost(spec, 8);
    const auto q16 = es::model_cost(spec, 16);
    EXPECT_EQ(q16.parameters, q8.parameters);
    EXPECT_EQ(q8.weight_bytes, q8.parameters);
    EXPECT_EQ(q16.weight_bytes, 2 * q8.weight_bytes);
    EXPECT_GT(q8.peak_activation_bytes, 0u);
    EXPECT_EQ(es::model_cost(spec, 8, 8).peak_activation_bytes * 2, q8.peak_activation_bytes);
  }
  // Parameter count matches the bundle.
  const auto b = es::init_weights(es::build_cnn(256), 1);
  std::uint64_t n = 0;
  for (const auto* t : es::tensor_refs(b.float_params)) n += t->size();
  EXPECT_EQ(es::model_cost(b.spec).parameters, n);
}

TEST(CostProperty, InstrumentedCountMatchesEstimate) {
  std::mt19937_64 rng(2);
  struct Case {
    es::Family family;
    int fs;
    std::size_t k;
    double seconds;
  };
  const Case cases[] = {{es::Family::DNN, 256, 5, 0.5}, {es::Family::DNN, 128, 3, 1.0},
                        {es::Family::CNN, 256, 9, 1.0}, {es::Family::CNN, 128, 4, 1.0},
                        {es::Family::CNN, 64, 2, 2.0},  {es::Family::LSTM, 64, 3, 2.0}};
  for (const auto& c : cases) {
    const auto spec = es::build_model(c.family, c.fs, c.k, es::samples_for(c.fs, c.seconds));
    const auto f = es::init_weights(spec, 3);
    const auto seg = testsupport::random_segment(c.k, spec.samples, rng);
    const auto expect = es::model_cost(spec).conv_fc_macs();
    EXPECT_EQ(es::instrumented_count(f, seg.data), expect) << es::family_name(c.family) << " fs " << c.fs;
    EXPECT_EQ(es::instrumented_count(es::quantize_model(f), seg.data), expect);
  }
  EXPECT_EQ(es::instrumented_count(es::WeightBundle{}, {}), 0u);
  // FC-only model: sum of per-layer products.
  const auto dnn = es::build_dnn(256);
  std::uint64_t sum = 0;
  for (const auto& l : dnn.layers) {
    if (l.kind == es::LayerKind::Fc) sum += es::mac_fc(l.in.size(), l.out.size());
  }
  EXPECT_EQ(es::instrumented_count(es::init_weights(dnn, 1),
                                   testsupport::random_segment(5, 128, rng).data),
            sum);
}

TEST(Cost, BenchmarkSanity) {
  std::mt19937_64 rng(4);
  std::vector<es::FloatTensor> segs;
  for (int i = 0; i < 4; ++i) segs.push_back(testsupport::random_segment(9, 256, rng));
  const auto cnn = es::quantize_model(es::init_weights(es::build_cnn(256), 1));
  const auto t = es::bench_inference(cnn, segs, 20);
  EXPECT_EQ(t.repetitions, 20u);
  EXPECT_EQ(t.segments, 4u);
  EXPECT_LT(t.median_us, 1e6);
  EXPECT_LE(t.min_us, t.median_us);
  EXPECT_LE(t.median_us, t.p95_us);
  EXPECT_LE(t.p95_us, 3 * t.median_us);
  EXPECT_THROW(es::bench_inference(cnn, segs, 9), es::Error);

  std::vector<es::FloatTensor> dseg, lseg;
  for (int i = 0; i < 2; ++i) {
    dseg.push_back(testsupport::random_segment(9, 128, rng));
    lseg.push_back(testsupport::random_segment(9, 256, rng));
  }
  const auto dnn = es::quantize_model(es::init_weights(es::build_dnn(256, 9, 0.5), 1));
  const auto lstm = es::quantize_model(es::init_weights(es::build_lstm(128, 9, 2.0), 1));
  EXPECT_LT(es::bench_inference(dnn, dseg, 10).median_us, es::bench_inference(lstm, lseg, 10).median_us);
}

TEST(Cost, ReportLines) {
  es::Report r;
  es::add_cost_report(r, es::model_cost(es::build_cnn(256)));
  std::ostringstream os;
  r.write_kv(os);
  EXPECT_NE(os.str().find("macs_conv=2367488\n"), std::string::npos);
  EXPECT_NE(os.str().find("macs_fc=816\n"), std::string::npos);
}
