// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "edgeseizure/quantizer.hpp"
#include "edgeseizure/stream.hpp"

namespace es = edgeseizure;

namespace {

es::Recording small_recording() {
  es::SynthConfig cfg;
  cfg.seed = 4;
  cfg.hours = 0.05;
  cfg.seizure_count = 1;
  cfg.channels = 3;
  cfg.fs = 64;
  return es::synth_generate(cfg);
}

}  // namespace

TEST(Stream, WindowsMatchDirectInference) {
  const auto rec = small_recording();
  const auto bundle = es::quantize_model(es::init_weights(es::build_cnn(64, 2, 1.0), 5));
  const std::vector<std::size_t> ch{2, 0};
  const auto labels = es::classify_stream(rec, ch, bundle, 0.5);
  EXPECT_EQ(labels.size(), (rec.duration_samples - 64) / 32 + 1);
  for (std::size_t k = 0; k < labels.size(); k += 37) {
    const auto w = es::cut_window(rec, ch, k * 32, 64);
    EXPECT_EQ(labels[k], es::infer_segment(bundle, w).label) << k;
  }
  EXPECT_EQ(es::classify_stream(rec, ch, bundle, 0.5, 3), labels);
  EXPECT_EQ(es::classify_stream(rec, ch, bundle, 0.5, 0), labels);
}

TEST(Stream, InputChecks) {
  const auto rec = small_recording();
  const auto bundle = es::init_weights(es::build_dnn(64, 2, 0.5), 5);
  const std::vector<std::size_t> two{0, 1}, three{0, 1, 2}, bad{0, 7};
  try {
    (void)es::classify_stream(rec, three, bundle, 0.5);
    FAIL();
  } catch (const es::Error& e) {
    EXPECT_EQ(e.code(), es::Errc::ChannelCountMismatch);
  }
  EXPECT_THROW(es::classify_stream(rec, bad, bundle, 0.5), es::Error);
  EXPECT_THROW(es::classify_stream(rec, two, bundle, 0.01), es::Error);
  EXPECT_THROW(es::classify_stream(rec, two, bundle, 0.0), es::Error);
  const auto other_fs = es::init_weights(es::build_dnn(128, 2, 0.5), 5);
  EXPECT_THROW(es::classify_stream(rec, two, other_fs, 0.5), es::Error);
}

TEST(Stream, RunWmvRecordsScoresAndEvents) {
  using es::Label;
  const std::vector<Label> preds{Label::Interictal, Label::Ictal, Label::Ictal, Label::Ictal};
  es::WmvParams p;
  p.theta_ictal = 3;
  p.beta_ictal = 1;
  const auto steps = es::run_wmv(preds, p, 0.5);
  ASSERT_EQ(steps.size(), 4u);
  EXPECT_EQ(steps[2].time_s, 1.0);
  EXPECT_EQ(steps[2].score_ictal, 3.0);
  EXPECT_EQ(steps[3].score_ictal, 6.0);
  EXPECT_EQ(steps[3].pred, Label::Ictal);
  const auto ev = es::events_of(steps);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].segment_index, 3u);
  EXPECT_EQ(ev[0].time_s, 1.5);
  EXPECT_EQ(ev, es::wmv_batch(preds, p, 0.5));
}
