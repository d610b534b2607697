// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "edgeseizure/eval.hpp"
#include "edgeseizure/wmv.hpp"

namespace es = edgeseizure;
using es::Label;

namespace {

constexpr Label I = Label::Ictal, P = Label::Preictal, N = Label::Interictal;

es::WmvParams params(std::size_t m, double a, double b, double th) {
  es::WmvParams p;
  p.window = m;
  p.alpha_ictal = a;
  p.beta_ictal = b;
  p.theta_ictal = th;
  return p;
}

std::vector<es::EventRecord> stream_events(std::span<const Label> preds, const es::WmvParams& p,
                                           double stride = 1.0) {
  es::WmvDetector det(p, stride);
  std::vector<es::EventRecord> out;
  for (Label y : preds) {
    if (auto e = det.push(y).event) out.push_back(*e);
  }
  return out;
}

std::vector<Label> random_labels(std::size_t n, std::mt19937_64& rng) {
  std::vector<Label> v(n);
  for (auto& y : v) y = static_cast<Label>(rng() % 3);
  return v;
}

}  // namespace

TEST(Wmv, HandTraceRunLengthBonus) {
  es::WmvDetector det(params(10, 1, 1, 3));
  auto s = det.push(I);
  EXPECT_EQ(s.score_ictal, 1.0);
  EXPECT_FALSE(s.event);
  s = det.push(I);
  EXPECT_EQ(s.score_ictal, 3.0);
  EXPECT_FALSE(s.event);
  s = det.push(I);
  EXPECT_EQ(s.score_ictal, 6.0);
  ASSERT_TRUE(s.event);
  EXPECT_EQ(s.event->kind, es::EventKind::IctalDetected);
  EXPECT_EQ(s.event->segment_index, 2u);
  EXPECT_EQ(det.state(), es::WmvState{});
}

TEST(Wmv, BrokenRunGetsNoBonus) {
  const auto p = params(10, 1, 5, 6);
  es::WmvDetector det(p);
  EXPECT_EQ(det.push(I).score_ictal, 1.0);
  EXPECT_EQ(det.push(N).score_ictal, 1.0);
  const auto s = det.push(I);
  EXPECT_EQ(s.score_ictal, 2.0);
  EXPECT_FALSE(s.event);

  es::WmvDetector run(p);
  EXPECT_EQ(run.push(I).score_ictal, 1.0);
  const auto r = run.push(I);
  EXPECT_EQ(r.score_ictal, 7.0);
  EXPECT_TRUE(r.event);
}

TEST(Wmv, PreictalRunBrokenByIctal) {
  es::WmvParams p;
  p.alpha_preictal = 1;
  p.beta_preictal = 1;
  p.theta_preictal = 100;
  es::WmvState st;
  wmv_push(st, P, p);
  wmv_push(st, P, p);
  EXPECT_EQ(st.score_preictal, 3.0);
  EXPECT_EQ(st.acc_preictal, 2u);
  wmv_push(st, I, p);
  EXPECT_EQ(st.acc_preictal, 0u);
  EXPECT_EQ(st.acc_ictal, 1u);
  wmv_push(st, P, p);
  EXPECT_EQ(st.score_preictal, 4.0);
}

TEST(Wmv, IctalCheckedBeforePreictal) {
  es::WmvParams p = params(10, 5, 0, 4);
  p.alpha_preictal = 5;
  p.theta_preictal = 4;
  es::WmvState st;
  // Preictal crosses first on its own.
  EXPECT_EQ(wmv_push(st, P, p), es::EventKind::PreictalWarning);
  EXPECT_EQ(st, es::WmvState{});
  EXPECT_EQ(wmv_push(st, I, p), es::EventKind::IctalDetected);
}

TEST(Wmv, WindowExhaustionResets) {
  const auto p = params(3, 1, 0, 10);
  es::WmvState st;
  wmv_push(st, I, p);
  wmv_push(st, I, p);
  EXPECT_EQ(st.pos, 2u);
  EXPECT_FALSE(wmv_push(st, I, p));
  EXPECT_EQ(st, es::WmvState{});
}

TEST(Wmv, InterictalStreamNeverFires) {
  const std::vector<Label> quiet(5000, N);
  for (std::size_t m : {1u, 7u, 60u}) {
    EXPECT_TRUE(stream_events(quiet, params(m, 1, 1, 0.5)).empty());
    EXPECT_TRUE(es::wmv_batch(quiet, params(m, 1, 1, 0.5)).empty());
  }
  EXPECT_TRUE(es::wmv_batch({}, es::WmvParams{}).empty());
}

TEST(Wmv, EventTimeIsIndexTimesStride) {
  const std::vector<Label> v{N, N, I, I, I, I};
  const auto ev = es::wmv_batch(v, params(10, 1, 0, 2.5), 0.5);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].segment_index, 4u);
  EXPECT_EQ(ev[0].time_s, 2.0);
  EXPECT_EQ(stream_events(v, params(10, 1, 0, 2.5), 0.5), ev);
}

TEST(Wmv, ParamValidation) {
  EXPECT_NO_THROW(es::WmvParams{}.validate());
  auto p = es::WmvParams{};
  p.window = 0;
  EXPECT_THROW(p.validate(), es::Error);
  p = {};
  p.theta_ictal = 0;
  EXPECT_THROW(p.validate(), es::Error);
  p = {};
  p.beta_preictal = -1;
  EXPECT_THROW(p.validate(), es::Error);
  p = {};
  p.alpha_ictal = -0.1;
  EXPECT_THROW(p.validate(), es::Error);
}

TEST(WmvProperty, StreamingMatchesBatchExhaustively) {
  es::WmvParams p = params(1, 1, 0.5, 2.5);
  p.alpha_preictal = 1;
  p.beta_preictal = 0.25;
  p.theta_preictal = 3;
  for (std::size_t m = 1; m <= 8; ++m) {
    p.window = m;
    std::size_t total = 1;
    for (std::size_t i = 0; i < m; ++i) total *= 3;
    std::vector<Label> seq(m);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (auto& y : seq) {
        y = static_cast<Label>(c % 3);
        c /= 3;
      }
      ASSERT_EQ(stream_events(seq, p), es::wmv_batch(seq, p)) << "M=" << m << " code=" << code;
    }
  }
}

TEST(WmvProperty, StreamingMatchesBatchRandomLong) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    es::WmvParams p;
    p.window = 1 + rng() % 80;
    p.beta_ictal = static_cast<double>(rng() % 5) * 0.25;
    p.theta_ictal = 1 + static_cast<double>(rng() % 20);
    p.theta_preictal = 1 + static_cast<double>(rng() % 30);
    const auto seq = random_labels(600, rng);
    ASSERT_EQ(stream_events(seq, p, 0.5), es::wmv_batch(seq, p, 0.5));
  }
}

TEST(WmvProperty, ScoresMonotoneAndEventsInsideWindow) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    es::WmvParams p;
    p.window = 1 + rng() % 40;
    p.theta_ictal = 1 + static_cast<double>(rng() % 15);
    es::WmvDetector det(p);
    double prev_i = 0, prev_p = 0;
    std::size_t window_start = 0;
    for (Label y : random_labels(400, rng)) {
      const std::size_t idx = det.consumed();
      const auto s = det.push(y);
      EXPECT_GE(s.score_ictal, prev_i);
      EXPECT_GE(s.score_preictal, prev_p);
      if (y == N) {
        EXPECT_EQ(s.score_ictal, prev_i);
        EXPECT_EQ(s.score_preictal, prev_p);
      }
      EXPECT_LE(det.state().pos, p.window);
      EXPECT_GE(s.score_ictal, 0.0);
      if (s.event) EXPECT_LT(s.event->segment_index - window_start, p.window);
      prev_i = s.score_ictal;
      prev_p = s.score_preictal;
      if (det.state().pos == 0) {
        prev_i = prev_p = 0;
        window_start = idx + 1;
      }
    }
  }
}

TEST(WmvProperty, PermutationInvariantWithoutRunTerms) {
  std::mt19937_64 rng(3);
  es::WmvParams p;
  p.window = 50;
  p.beta_ictal = p.beta_preictal = 0;
  p.theta_ictal = p.theta_preictal = 1e9;
  for (int trial = 0; trial < 200; ++trial) {
    auto seq = random_labels(49, rng);
    es::WmvState a, b;
    for (Label y : seq) wmv_push(a, y, p);
    std::shuffle(seq.begin(), seq.end(), rng);
    for (Label y : seq) wmv_push(b, y, p);
    EXPECT_EQ(a.score_ictal, b.score_ictal);
    EXPECT_EQ(a.score_preictal, b.score_preictal);
  }
}

TEST(MovingAverage, Examples) {
  const std::vector<Label> all(40, I);
  const auto ev = es::moving_average_detector(all, 5, 0.5);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].segment_index, 4u);
  EXPECT_EQ(ev[0].kind, es::EventKind::IctalDetected);

  std::vector<Label> alt(40);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? N : I;
  EXPECT_TRUE(es::moving_average_detector(alt, 10, 0.6).empty());

  // Re-arms once the share drops to the threshold (index 5), fires again at
  // index 10 where three of the last four are preictal.
  std::vector<Label> two(4, P);
  two.insert(two.end(), 4, N);
  two.insert(two.end(), 4, P);
  const auto w = es::moving_average_detector(two, 4, 0.5, 0.5);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].kind, es::EventKind::PreictalWarning);
  EXPECT_EQ(w[1].segment_index, 10u);
  EXPECT_EQ(w[1].time_s, 5.0);
  EXPECT_THROW(es::moving_average_detector(all, 0, 0.5), es::Error);
}

namespace {

// Label stream of a classifier that is right 85% of the time inside a
// seizure, emits short false ictal bursts and scattered ictal and preictal
// errors elsewhere.
struct NoisyStream {
  std::vector<Label> preds;
  std::vector<es::SeizureInterval> seizures;
  double hours = 0;
};

NoisyStream noisy_stream(std::uint64_t seed, double stride) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  const std::size_t n = static_cast<std::size_t>(3600 / stride);
  NoisyStream s;
  s.hours = 1.0;
  s.preds.assign(n, N);
  for (int k = 0; k < 3; ++k) {
    const double start = 300 + k * 1200 + u(rng) * 600;
    s.seizures.push_back({start, start + 60});
  }
  std::size_t burst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * stride;
    const bool in = std::any_of(s.seizures.begin(), s.seizures.end(),
                                [&](const auto& z) { return t >= z.start_s && t < z.end_s; });
    if (in) {
      s.preds[i] = u(rng) < 0.85 ? I : N;
      continue;
    }
    if (burst == 0 && u(rng) < 0.005) burst = 1 + static_cast<std::size_t>(std::floor(std::log(u(rng)) / std::log(0.5)));
    if (burst > 0) {
      s.preds[i] = I;
      --burst;
    } else if (u(rng) < 0.05) {
      s.preds[i] = I;
    } else if (u(rng) < 0.05) {
      s.preds[i] = P;
    }
  }
  return s;
}

template <class Detector>
es::EventMetrics pooled(const std::vector<NoisyStream>& streams, Detector&& det) {
  es::EventMetrics total;
  for (const auto& s : streams) {
    const auto m = es::match_detections(det(s.preds), s.seizures, s.hours);
    total.tp += m.tp;
    total.fp += m.fp;
    total.fn += m.fn;
    total.hours += m.hours;
  }
  total.sensitivity = static_cast<double>(total.tp) / static_cast<double>(total.tp + total.fn);
  total.fpr_per_hour = static_cast<double>(total.fp) / total.hours;
  return total;
}

}  // namespace

TEST(WmvProperty, LowerFprThanMovingAverageAtMatchedSensitivity) {
  const double stride = 0.5;
  std::vector<NoisyStream> streams;
  for (std::uint64_t seed = 0; seed < 40; ++seed) streams.push_back(noisy_stream(seed, stride));
  const es::WmvParams p;
  const auto wmv = pooled(streams, [&](const auto& preds) { return es::wmv_batch(preds, p, stride); });
  ASSERT_GT(wmv.sensitivity, 0.9);
  // Moving average over the same window, every distinct threshold.
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p.window; ++k) {
    const double th = (static_cast<double>(k) + 0.5) / static_cast<double>(p.window);
    const auto ma = pooled(streams, [&](const auto& preds) {
      return es::moving_average_detector(preds, p.window, th, stride);
    });
    if (ma.sensitivity >= wmv.sensitivity) best = std::min(best, ma.fpr_per_hour);
  }
  EXPECT_LT(wmv.fpr_per_hour, best);
}
