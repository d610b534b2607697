// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <unistd.h>

#include "edgeseizure/data.hpp"
#include "oracles.hpp"

namespace es = edgeseizure;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("edgeseizure_data_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

es::Recording blank(int fs, std::size_t channels, std::size_t samples) {
  es::Recording r;
  r.fs = fs;
  for (std::size_t c = 0; c < channels; ++c) r.channel_names.push_back("ch" + std::to_string(c));
  r.duration_samples = samples;
  r.samples.assign(channels * samples, 0);
  return r;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

template <class F>
void expect_code(es::Errc code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "no exception";
  } catch (const es::Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// Sine of amplitude `amp[c]` on channel c inside each annotation.
void paint_bursts(es::Recording& r, const std::vector<double>& amp, double hz) {
  for (const auto& a : r.annotations) {
    for (std::size_t c = 0; c < r.channel_count(); ++c) {
      const auto lo = static_cast<std::size_t>(a.start_s * r.fs);
      const auto hi = static_cast<std::size_t>(a.end_s * r.fs);
      for (std::size_t t = lo; t < hi; ++t) {
        r.samples[c * r.duration_samples + t] = static_cast<std::int16_t>(
            std::lround(amp[c] * std::sin(2 * std::numbers::pi * hz * t / r.fs)));
      }
    }
  }
}

}  // namespace

TEST(Data, RecordingRoundTrip) {
  TempDir dir;
  auto r = blank(4, 2, 10);
  for (std::size_t i = 0; i < r.samples.size(); ++i) r.samples[i] = static_cast<std::int16_t>(i * 37 - 200);
  r.annotations = {{0.5, 1.25}};
  es::save_recording(r, dir / "a.sig", dir / "a.json");
  EXPECT_EQ(fs::file_size(dir / "a.sig"), 40u);
  const auto back = es::load_recording(dir / "a.sig", dir / "a.json");
  EXPECT_EQ(back.duration_samples, 10u);
  EXPECT_TRUE(back == r);
  // Frame-interleaved on disk: second int16 is channel 1 at t = 0.
  std::ifstream in(dir / "a.sig", std::ios::binary);
  std::int16_t first[2];
  in.read(reinterpret_cast<char*>(first), 4);
  EXPECT_EQ(first[0], r.channel(0)[0]);
  EXPECT_EQ(first[1], r.channel(1)[0]);
  const auto meta = es::load_recording_meta(dir / "a.json");
  EXPECT_EQ(meta.annotations, r.annotations);
  EXPECT_TRUE(meta.samples.empty());
}

TEST(Data, RecordingErrors) {
  TempDir dir;
  const auto r = blank(4, 2, 10);
  es::save_recording(r, dir / "a.sig", dir / "a.json");
  write_text(dir / "three.json",
             R"({"fs":4,"channel_names":["a","b","c"],"duration_samples":10,"annotations":[]})");
  expect_code(es::Errc::ChannelCountMismatch, [&] { es::load_recording(dir / "a.sig", dir / "three.json"); });
  write_text(dir / "rev.json",
             R"({"fs":4,"channel_names":["a","b"],"duration_samples":10,"annotations":[{"start_s":5,"end_s":3}]})");
  expect_code(es::Errc::OverlappingAnnotations, [&] { es::load_recording(dir / "a.sig", dir / "rev.json"); });
  write_text(dir / "ovl.json",
             R"({"fs":4,"channel_names":["a","b"],"duration_samples":10,"annotations":[{"start_s":0,"end_s":1.5},{"start_s":1,"end_s":2}]})");
  expect_code(es::Errc::OverlappingAnnotations, [&] { es::load_recording(dir / "a.sig", dir / "ovl.json"); });
  write_text(dir / "past.json",
             R"({"fs":4,"channel_names":["a","b"],"duration_samples":10,"annotations":[{"start_s":1,"end_s":3}]})");
  expect_code(es::Errc::OverlappingAnnotations, [&] { es::load_recording(dir / "a.sig", dir / "past.json"); });
  write_text(dir / "nofs.json", R"({"channel_names":["a","b"],"duration_samples":10,"annotations":[]})");
  expect_code(es::Errc::BadHeader, [&] { es::load_recording(dir / "a.sig", dir / "nofs.json"); });
  write_text(dir / "junk.json", "{not json");
  expect_code(es::Errc::BadHeader, [&] { es::load_recording(dir / "a.sig", dir / "junk.json"); });
  write_text(dir / "type.json", R"({"fs":"x","channel_names":["a","b"],"duration_samples":10,"annotations":[]})");
  expect_code(es::Errc::BadHeader, [&] { es::load_recording(dir / "a.sig", dir / "type.json"); });
  expect_code(es::Errc::Io, [&] { es::load_recording(dir / "none.sig", dir / "a.json"); });
}

TEST(Data, SliceShiftsAnnotations) {
  auto r = blank(4, 1, 40);
  for (std::size_t t = 0; t < 40; ++t) r.samples[t] = static_cast<std::int16_t>(t);
  r.annotations = {{1.0, 3.0}, {6.0, 8.0}};
  const auto s = es::slice_recording(r, 2.0, 7.0);
  EXPECT_EQ(s.duration_samples, 20u);
  EXPECT_EQ(s.channel(0)[0], 8);
  EXPECT_EQ(s.annotations, (std::vector<es::SeizureInterval>{{0.0, 1.0}, {4.0, 5.0}}));
  EXPECT_THROW(es::slice_recording(r, 5.0, 5.0), es::Error);
}

TEST(Data, LineLengthExamples) {
  EXPECT_EQ(es::line_length(std::vector<double>(50, 3.5)), 0.0);
  EXPECT_DOUBLE_EQ(es::line_length(std::vector<double>{0, 1, 0, 1}), 0.75);
  EXPECT_DOUBLE_EQ(es::line_length(std::vector<std::int16_t>{0, 1, 0, 1}), 0.75);
  EXPECT_THROW(es::line_length(std::vector<double>{1.0}), es::Error);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 100);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(2 + rng() % 500);
    for (auto& v : x) v = g(rng);
    EXPECT_NEAR(es::line_length(x), oracles::line_length(x), 1e-12 * (1 + oracles::line_length(x)));
    std::vector<std::int16_t> xi(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) xi[t] = static_cast<std::int16_t>(std::lround(x[t]));
    EXPECT_EQ(es::line_length(xi), oracles::line_length(xi));
  }
}

TEST(Data, RankExamples) {
  auto r = blank(32, 2, 32 * 20);
  r.annotations = {{5.0, 10.0}};
  paint_bursts(r, {0.0, 300.0}, 5.0);
  EXPECT_EQ(es::rank_channels(r, 1), (std::vector<std::size_t>{1}));

  auto g = blank(64, 5, 64 * 60);
  g.annotations = {{10.0, 20.0}, {40.0, 45.0}};
  paint_bursts(g, {200.0, 900.0, 50.0, 500.0, 700.0}, 7.0);
  EXPECT_EQ(es::rank_channels(g, 5), (std::vector<std::size_t>{1, 4, 3, 0, 2}));
  auto all = es::rank_channels(g, 5);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_THROW(es::rank_channels(g, 0), es::Error);
  EXPECT_THROW(es::rank_channels(g, 6), es::Error);

  // Ties keep the lower index first.
  auto t = blank(32, 3, 32 * 10);
  t.annotations = {{1.0, 4.0}};
  paint_bursts(t, {100.0, 300.0, 100.0}, 3.0);
  EXPECT_EQ(es::rank_channels(t, 3), (std::vector<std::size_t>{1, 0, 2}));

  auto none = blank(32, 3, 320);
  EXPECT_THROW(es::rank_channels(none, 1), es::Error);
}

TEST(DataProperty, RankInvariantToDcOffset) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> v(-2000, 2000), dc(-5000, 5000);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = blank(16, 6, 16 * 30);
    r.annotations = {{3.0, 9.0}, {15.0, 25.0}};
    for (auto& s : r.samples) s = static_cast<std::int16_t>(v(rng));
    auto shifted = r;
    for (std::size_t c = 0; c < 6; ++c) {
      const int off = dc(rng);
      for (std::size_t t = 0; t < r.duration_samples; ++t) {
        auto& s = shifted.samples[c * r.duration_samples + t];
        s = static_cast<std::int16_t>(s + off);
      }
    }
    EXPECT_EQ(es::rank_channels(r, 6), es::rank_channels(shifted, 6));
    EXPECT_EQ(es::channel_line_lengths(r), es::channel_line_lengths(shifted));
  }
}

TEST(Data, ExtractionExamples) {
  auto r = blank(16, 2, 16 * 400);
  r.annotations = {{250.0, 260.0}};
  es::ExtractConfig cfg;
  cfg.interictal_clearance_h = 0.02;
  const std::vector<std::size_t> ch{1, 0};
  const auto segs = es::extract_segments(r, ch, cfg);
  const auto counts = es::class_counts(segs);
  EXPECT_EQ(counts[0], 19u);
  EXPECT_EQ(counts[1], 180u);
  EXPECT_EQ(segs[0].start_s, 250.0);
  EXPECT_EQ(segs[1].start_s, 250.5);
  EXPECT_EQ(segs[0].data.shape, (es::Shape{2, 16}));

  const auto p = es::preictal_span(200.0, cfg);
  EXPECT_EQ(p, (es::Span{-10.0, 170.0}));
  auto early = blank(16, 1, 16 * 300);
  early.annotations = {{200.0, 210.0}};
  const std::vector<std::size_t> one{0};
  EXPECT_EQ(es::class_counts(es::extract_segments(early, one, cfg))[1], 170u);

  auto six = blank(1, 1, 6 * 3600);
  six.annotations = {{3 * 3600.0, 3 * 3600.0 + 40.0}};
  es::ExtractConfig d;
  EXPECT_EQ(es::interictal_regions(six, d),
            (std::vector<es::Span>{{0.0, 3600.0}, {5 * 3600.0 + 40.0, 6 * 3600.0}}));
}

TEST(Data, InterictalSamplingIsSeeded) {
  auto r = blank(16, 1, 16 * 2000);
  es::ExtractConfig cfg;
  cfg.interictal_clearance_h = 0.01;
  cfg.max_interictal = 50;
  cfg.seed = 3;
  const std::vector<std::size_t> ch{0};
  const auto a = es::extract_segments(r, ch, cfg);
  const auto b = es::extract_segments(r, ch, cfg);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].start_s, b[i].start_s);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].start_s, a[i].start_s);
  cfg.seed = 4;
  const auto c = es::extract_segments(r, ch, cfg);
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) differ |= a[i].start_s != c[i].start_s;
  EXPECT_TRUE(differ);
}

TEST(DataProperty, SegmentsRespectRegionsAndCounts) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int fs = 8;
    const double clear_s = 72.0;
    es::ExtractConfig cfg;
    cfg.interictal_clearance_h = clear_s / 3600.0;
    // Integer-second seizures spaced so preictal spans never touch another seizure.
    std::vector<es::SeizureInterval> anns;
    double t = 250.0 + static_cast<double>(rng() % 100);
    const std::size_t count = 1 + rng() % 4;
    for (std::size_t i = 0; i < count; ++i) {
      const double len = 2.0 + static_cast<double>(rng() % 60);
      anns.push_back({t, t + len});
      t += len + 260.0 + static_cast<double>(rng() % 400);
    }
    const double dur = t + static_cast<double>(rng() % 300);
    auto r = blank(fs, 3, static_cast<std::size_t>(dur) * fs);
    r.annotations = anns;
    const std::vector<std::size_t> ch{2, 0};
    const auto segs = es::extract_segments(r, ch, cfg);

    std::array<std::size_t, 3> expect{};
    for (const auto& a : anns) expect[0] += static_cast<std::size_t>(std::floor((a.duration() - 1.0) / 0.5)) + 1;
    expect[1] = 180 * anns.size();
    double cursor = 0.0;
    for (const auto& a : anns) {
      const double lo = a.start_s - clear_s;
      if (lo > cursor) expect[2] += static_cast<std::size_t>(std::floor(lo - cursor));
      cursor = std::max(cursor, a.end_s + clear_s);
    }
    if (dur > cursor) expect[2] += static_cast<std::size_t>(std::floor(dur - cursor));
    EXPECT_EQ(es::class_counts(segs), expect);

    for (const auto& s : segs) {
      const double end = s.start_s + 1.0;
      if (s.label == es::Label::Ictal) {
        EXPECT_TRUE(std::any_of(anns.begin(), anns.end(), [&](const auto& a) {
          return s.start_s >= a.start_s && end <= a.end_s;
        }));
      } else if (s.label == es::Label::Preictal) {
        EXPECT_TRUE(std::any_of(anns.begin(), anns.end(), [&](const auto& a) {
          return s.start_s >= a.start_s - 210.0 && end <= a.start_s - 30.0;
        }));
      } else {
        for (const auto& a : anns) {
          EXPECT_TRUE(end <= a.start_s - clear_s || s.start_s >= a.end_s + clear_s);
        }
      }
      EXPECT_EQ(s.data.shape, (es::Shape{2, static_cast<std::size_t>(fs)}));
    }
  }
}

TEST(Data, TiledWindowCount) {
  EXPECT_EQ(es::tiled_window_count(2560, 256, 128), 19u);
  EXPECT_EQ(es::tiled_window_count(255, 256, 128), 0u);
  EXPECT_EQ(es::tiled_window_count(256, 256, 256), 1u);
  EXPECT_EQ(es::tiled_window_count(100, 10, 0), 0u);
}

TEST(Data, SynthDeterministicAndRanked) {
  es::SynthConfig cfg;
  cfg.seed = 7;
  cfg.patient = 3;
  cfg.hours = 0.1;
  cfg.seizure_count = 2;
  cfg.channels = 6;
  cfg.fs = 64;
  const auto a = es::synth_generate(cfg);
  const auto b = es::synth_generate(cfg);
  EXPECT_TRUE(a == b);
  EXPECT_NO_THROW(a.validate());
  ASSERT_EQ(a.annotations.size(), 2u);
  for (const auto& s : a.annotations) {
    EXPECT_GE(s.duration(), cfg.seizure_min_s);
    EXPECT_LE(s.duration(), cfg.seizure_max_s);
  }
  const auto gains = es::synth_channel_gains(cfg);
  const auto best = static_cast<std::size_t>(std::max_element(gains.begin(), gains.end()) - gains.begin());
  EXPECT_EQ(es::rank_channels(a, 1)[0], best);

  cfg.seed = 8;
  EXPECT_EQ(es::synth_channel_gains(cfg), gains);
  EXPECT_FALSE(es::synth_generate(cfg) == a);
  cfg.seizure_count = 0;
  EXPECT_TRUE(es::synth_generate(cfg).annotations.empty());
}

TEST(Data, SegmentArchiveRoundTrip) {
  TempDir dir;
  es::SegmentSet set;
  set.fs = 16;
  set.channels = {4, 1};
  set.samples = 8;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> v(-32768, 32767);
  for (int i = 0; i < 6; ++i) {
    es::FloatTensor t({2, 8});
    for (auto& x : t.data) x = v(rng);
    set.segments.push_back({t, static_cast<es::Label>(i % 3), 1.5 * i});
  }
  es::save_segments(set, dir / "s.eds");
  const auto back = es::load_segments(dir / "s.eds");
  EXPECT_EQ(back.fs, 16);
  EXPECT_EQ(back.channels, set.channels);
  ASSERT_EQ(back.segments.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(back.segments[i].data.data, set.segments[i].data.data);
    EXPECT_EQ(back.segments[i].label, set.segments[i].label);
    EXPECT_EQ(back.segments[i].start_s, set.segments[i].start_s);
  }

  auto bytes = std::vector<char>(fs::file_size(dir / "s.eds"));
  std::ifstream(dir / "s.eds", std::ios::binary).read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  bytes[30] ^= 0x10;
  std::ofstream(dir / "bad.eds", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  expect_code(es::Errc::ChecksumMismatch, [&] { es::load_segments(dir / "bad.eds"); });
  write_text(dir / "magic.eds", "XXXXXXXXXXXXXXXXXXXX");
  expect_code(es::Errc::BadMagic, [&] { es::load_segments(dir / "magic.eds"); });

  set.segments[0].data.data[0] = 0.5;
  expect_code(es::Errc::InvalidArgument, [&] { es::save_segments(set, dir / "x.eds"); });
}
