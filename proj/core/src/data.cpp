// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"

namespace edgeseizure {
namespace {

using json = nlohmann::json;

std::size_t to_sample_ceil(double t, int fs) noexcept {
  const double v = std::ceil(t * fs - 1e-9);
  return v <= 0.0 ? 0 : static_cast<std::size_t>(v);
}

std::size_t to_sample_floor(double t, int fs) noexcept {
  const double v = std::floor(t * fs + 1e-9);
  return v <= 0.0 ? 0 : static_cast<std::size_t>(v);
}

std::size_t window_samples(int fs, double seconds) {
  const double n = fs * seconds;
  if (seconds <= 0.0 || std::abs(n - std::round(n)) > 1e-9 || std::round(n) < 1.0) {
    throw Error(Errc::InvalidArgument, "fs * seg_seconds must be a positive integer");
  }
  return static_cast<std::size_t>(std::round(n));
}

// Subtracts every seizure interval from `span`, returning the pieces left.
std::vector<Span> subtract_seizures(Span span, const std::vector<SeizureInterval>& seizures) {
  std::vector<Span> pieces{span};
  for (const auto& sz : seizures) {
    std::vector<Span> next;
    for (const Span& p : pieces) {
      if (sz.end_s <= p.start_s || sz.start_s >= p.end_s) {
        next.push_back(p);
        continue;
      }
      if (sz.start_s > p.start_s) next.push_back({p.start_s, sz.start_s});
      if (sz.end_s < p.end_s) next.push_back({sz.end_s, p.end_s});
    }
    pieces = std::move(next);
  }
  return pieces;
}

template <class T>
T require_field(const json& meta, const char* name) {
  if (!meta.contains(name)) throw Error(Errc::BadHeader, std::string("meta field '") + name + "' missing");
  try {
    return meta.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::BadHeader, std::string("meta field '") + name + "' has the wrong type");
  }
}

Recording parse_meta(const std::filesystem::path& meta_path) {
  std::ifstream in(meta_path);
  if (!in) throw Error(Errc::Io, "cannot open " + meta_path.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw Error(Errc::BadHeader, "meta file is not valid JSON: " + std::string(e.what()));
  }
  if (!meta.is_object()) throw Error(Errc::BadHeader, "meta file must hold a JSON object");
  Recording rec;
  rec.fs = require_field<int>(meta, "fs");
  rec.channel_names = require_field<std::vector<std::string>>(meta, "channel_names");
  const auto dur = require_field<long long>(meta, "duration_samples");
  if (dur < 0) throw Error(Errc::BadHeader, "meta field 'duration_samples' is negative");
  rec.duration_samples = static_cast<std::size_t>(dur);
  const json anns = require_field<json>(meta, "annotations");
  if (!anns.is_array()) throw Error(Errc::BadHeader, "meta field 'annotations' must be an array");
  for (const json& a : anns) {
    if (!a.is_object()) throw Error(Errc::BadHeader, "annotation entries must be objects");
    rec.annotations.push_back(
        {require_field<double>(a, "start_s"), require_field<double>(a, "end_s")});
  }
  if (rec.fs <= 0) throw Error(Errc::BadHeader, "meta field 'fs' must be positive");
  if (rec.channel_names.empty()) throw Error(Errc::BadHeader, "meta field 'channel_names' is empty");
  return rec;
}

void check_annotations(const Recording& rec) {
  const double dur = rec.duration_s();
  for (std::size_t i = 0; i < rec.annotations.size(); ++i) {
    const auto& a = rec.annotations[i];
    if (!(a.start_s >= 0.0 && a.start_s < a.end_s && a.end_s <= dur + 1e-9)) {
      throw Error(Errc::OverlappingAnnotations,
                  "annotation " + std::to_string(i) + " is not a valid interval inside the recording");
    }
    if (i > 0 && a.start_s < rec.annotations[i - 1].end_s) {
      throw Error(Errc::OverlappingAnnotations,
                  "annotation " + std::to_string(i) + " overlaps or precedes its predecessor");
    }
  }
}

}  // namespace

void Recording::validate() const {
  if (fs <= 0) throw Error(Errc::BadHeader, "fs must be positive");
  if (channel_names.empty()) throw Error(Errc::BadHeader, "recording has no channels");
  if (samples.size() != channel_count() * duration_samples) {
    throw Error(Errc::ChannelCountMismatch, "sample count does not equal channels * duration");
  }
  check_annotations(*this);
}

Recording load_recording_meta(const std::filesystem::path& meta_path) {
  Recording rec = parse_meta(meta_path);
  check_annotations(rec);
  return rec;
}

Recording load_recording(const std::filesystem::path& signal_path,
                         const std::filesystem::path& meta_path) {
  Recording rec = parse_meta(meta_path);
  const std::vector<std::uint8_t> raw = detail::read_file(signal_path);
  const std::size_t ch = rec.channel_count();
  const std::size_t dur = rec.duration_samples;
  if (raw.size() != 2 * ch * dur) {
    throw Error(Errc::ChannelCountMismatch,
                "signal payload is " + std::to_string(raw.size()) + " bytes, meta implies " +
                    std::to_string(2 * ch * dur) + " (channels * duration_samples * 2)");
  }
  rec.samples.resize(ch * dur);
  for (std::size_t t = 0; t < dur; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      std::int16_t v;
      std::memcpy(&v, raw.data() + 2 * (t * ch + c), 2);
      rec.samples[c * dur + t] = v;
    }
  }
  rec.validate();
  return rec;
}

void save_recording(const Recording& rec, const std::filesystem::path& signal_path,
                    const std::filesystem::path& meta_path) {
  rec.validate();
  const std::size_t ch = rec.channel_count();
  const std::size_t dur = rec.duration_samples;
  std::vector<std::uint8_t> raw(2 * ch * dur);
  for (std::size_t t = 0; t < dur; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      std::memcpy(raw.data() + 2 * (t * ch + c), &rec.samples[c * dur + t], 2);
    }
  }
  detail::write_file(signal_path, raw);

  json meta;
  meta["fs"] = rec.fs;
  meta["channel_names"] = rec.channel_names;
  meta["duration_samples"] = rec.duration_samples;
  meta["annotations"] = json::array();
  for (const auto& a : rec.annotations) {
    meta["annotations"].push_back({{"start_s", a.start_s}, {"end_s", a.end_s}});
  }
  std::ofstream out(meta_path, std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + meta_path.string());
  out << meta.dump(2) << '\n';
}

Recording slice_recording(const Recording& rec, double start_s, double end_s) {
  const std::size_t a = std::min(to_sample_ceil(start_s, rec.fs), rec.duration_samples);
  const std::size_t b = std::min(to_sample_floor(end_s, rec.fs), rec.duration_samples);
  if (b <= a) throw Error(Errc::InvalidArgument, "empty recording slice");
  Recording out;
  out.fs = rec.fs;
  out.channel_names = rec.channel_names;
  out.duration_samples = b - a;
  out.samples.reserve(rec.channel_count() * out.duration_samples);
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    auto ch = rec.channel(c).subspan(a, b - a);
    out.samples.insert(out.samples.end(), ch.begin(), ch.end());
  }
  const double t0 = static_cast<double>(a) / rec.fs;
  const double t1 = static_cast<double>(b) / rec.fs;
  for (const auto& s : rec.annotations) {
    const double lo = std::max(s.start_s, t0);
    const double hi = std::min(s.end_s, t1);
    if (hi > lo) out.annotations.push_back({lo - t0, hi - t0});
  }
  return out;
}

double line_length(std::span<const double> x) {
  if (x.size() < 2) throw Error(Errc::InvalidArgument, "line length needs at least two samples");
  double sum = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) sum += std::abs(x[t - 1] - x[t]);
  return sum / static_cast<double>(x.size());
}

double line_length(std::span<const std::int16_t> x) {
  if (x.size() < 2) throw Error(Errc::InvalidArgument, "line length needs at least two samples");
  std::int64_t sum = 0;
  for (std::size_t t = 1; t < x.size(); ++t) sum += std::abs(int{x[t - 1]} - int{x[t]});
  return static_cast<double>(sum) / static_cast<double>(x.size());
}

std::vector<double> channel_line_lengths(const Recording& rec) {
  if (rec.annotations.empty()) {
    throw Error(Errc::InvalidArgument, "channel ranking needs at least one annotated seizure");
  }
  std::vector<double> score(rec.channel_count(), 0.0);
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    const auto ch = rec.channel(c);
    double total = 0.0;
    for (const auto& sz : rec.annotations) {
      const std::size_t a = std::min(to_sample_ceil(sz.start_s, rec.fs), rec.duration_samples);
      const std::size_t b = std::min(to_sample_floor(sz.end_s, rec.fs), rec.duration_samples);
      if (b < a + 2) throw Error(Errc::InvalidArgument, "seizure shorter than two samples");
      total += line_length(ch.subspan(a, b - a));
    }
    score[c] = total / static_cast<double>(rec.annotations.size());
  }
  return score;
}

std::vector<std::size_t> rank_channels(const Recording& rec, std::size_t k) {
  if (k < 1 || k > rec.channel_count()) {
    throw Error(Errc::InvalidArgument, "k must be between 1 and the channel count");
  }
  const std::vector<double> score = channel_line_lengths(rec);
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(k);
  return order;
}

Span preictal_span(double seizure_start_s, const ExtractConfig& cfg) noexcept {
  const double end = seizure_start_s - cfg.preictal_gap_s;
  return {end - cfg.preictal_minutes * 60.0, end};
}

std::vector<Span> interictal_regions(const Recording& rec, const ExtractConfig& cfg) {
  const double clear = cfg.interictal_clearance_h * 3600.0;
  std::vector<Span> regions;
  double cursor = 0.0;
  for (const auto& sz : rec.annotations) {
    const double lo = sz.start_s - clear;
    if (lo > cursor) regions.push_back({cursor, lo});
    cursor = std::max(cursor, sz.end_s + clear);
  }
  if (rec.duration_s() > cursor) regions.push_back({cursor, rec.duration_s()});
  return regions;
}

std::size_t tiled_window_count(std::size_t interval_samples, std::size_t window_samples,
                               std::size_t hop_samples) noexcept {
  if (hop_samples == 0 || interval_samples < window_samples) return 0;
  return (interval_samples - window_samples) / hop_samples + 1;
}

FloatTensor cut_window(const Recording& rec, std::span<const std::size_t> channels,
                       std::size_t start_sample, std::size_t length) {
  if (start_sample + length > rec.duration_samples) {
    throw Error(Errc::InvalidArgument, "window extends past the end of the recording");
  }
  FloatTensor t({channels.size(), length});
  for (std::size_t k = 0; k < channels.size(); ++k) {
    if (channels[k] >= rec.channel_count()) {
      throw Error(Errc::InvalidArgument, "channel index " + std::to_string(channels[k]) + " out of range");
    }
    const auto src = rec.channel(channels[k]).subspan(start_sample, length);
    std::copy(src.begin(), src.end(), t.data.begin() + static_cast<std::ptrdiff_t>(k * length));
  }
  return t;
}

std::vector<Segment> extract_segments(const Recording& rec,
                                      std::span<const std::size_t> channels,
                                      const ExtractConfig& cfg) {
  const std::size_t n = window_samples(rec.fs, cfg.seg_seconds);
  if (cfg.ictal_overlap < 0.0 || cfg.ictal_overlap >= 1.0) {
    throw Error(Errc::InvalidArgument, "ictal overlap must be in [0, 1)");
  }
  const auto ictal_hop =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * (1.0 - cfg.ictal_overlap))));
  for (std::size_t c : channels) {
    if (c >= rec.channel_count()) {
      throw Error(Errc::InvalidArgument, "channel index " + std::to_string(c) + " out of range");
    }
  }
  std::vector<Segment> out;
  auto tile = [&](Span span, std::size_t hop, Label label, std::vector<Segment>& dst) {
    const std::size_t a = std::min(to_sample_ceil(std::max(span.start_s, 0.0), rec.fs), rec.duration_samples);
    const std::size_t b = std::min(to_sample_floor(span.end_s, rec.fs), rec.duration_samples);
    if (b <= a) return;
    const std::size_t count = tiled_window_count(b - a, n, hop);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t s = a + i * hop;
      dst.push_back({cut_window(rec, channels, s, n), label, static_cast<double>(s) / rec.fs});
    }
  };

  for (const auto& sz : rec.annotations) tile({sz.start_s, sz.end_s}, ictal_hop, Label::Ictal, out);

  for (const auto& sz : rec.annotations) {
    Span span = preictal_span(sz.start_s, cfg);
    span.start_s = std::max(span.start_s, 0.0);
    if (span.end_s <= span.start_s) continue;
    for (const Span& piece : subtract_seizures(span, rec.annotations)) {
      tile(piece, n, Label::Preictal, out);
    }
  }

  std::vector<Segment> inter;
  for (const Span& r : interictal_regions(rec, cfg)) tile(r, n, Label::Interictal, inter);
  if (cfg.max_interictal > 0 && inter.size() > cfg.max_interictal) {
    std::vector<std::size_t> idx(inter.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cfg.max_interictal);
    std::sort(idx.begin(), idx.end());
    std::vector<Segment> picked;
    picked.reserve(idx.size());
    for (std::size_t i : idx) picked.push_back(std::move(inter[i]));
    inter = std::move(picked);
  }
  std::move(inter.begin(), inter.end(), std::back_inserter(out));
  return out;
}

std::array<std::size_t, kNumClasses> class_counts(std::span<const Segment> segments) noexcept {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& s : segments) ++counts[static_cast<std::size_t>(s.label)];
  return counts;
}

// Synthetic recordings --------------------------------------------------------

std::vector<double> synth_channel_gains(const SynthConfig& cfg) {
  const std::size_t ch = cfg.channels;
  std::vector<std::size_t> rank(ch);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.patient ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> gains(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    const double r = ch > 1 ? static_cast<double>(rank[c]) / static_cast<double>(ch - 1) : 0.0;
    gains[c] = 1.0 - 0.85 * r;
  }
  return gains;
}

Recording synth_generate(const SynthConfig& cfg) {
  if (cfg.channels < 1 || cfg.fs < 4 || cfg.hours <= 0.0) {
    throw Error(Errc::InvalidArgument, "synthetic recording needs channels >= 1, fs >= 4, hours > 0");
  }
  constexpr double kBackgroundStd = 40.0;
  constexpr double kSeizureGain = 5.0;
  constexpr double kPrecursorGain = 0.9;
  constexpr double kPrecursorLead = 240.0;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  const int fs = cfg.fs;
  const double total_s = std::round(cfg.hours * 3600.0);
  const auto dur = static_cast<std::size_t>(total_s) * static_cast<std::size_t>(fs);
  const std::size_t ch = cfg.channels;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Recording rec;
  rec.fs = fs;
  rec.duration_samples = dur;
  for (std::size_t c = 0; c < ch; ++c) rec.channel_names.push_back("ch" + std::to_string(c));

  // One seizure per slot, leaving room for the preictal span before it.
  if (cfg.seizure_count > 0) {
    const double slot = total_s / static_cast<double>(cfg.seizure_count);
    for (std::size_t i = 0; i < cfg.seizure_count; ++i) {
      const double d = std::round(cfg.seizure_min_s + unit(rng) * (cfg.seizure_max_s - cfg.seizure_min_s));
      const double lo = i * slot + 300.0;
      const double hi = (i + 1) * slot - 60.0 - d;
      double start = hi > lo ? lo + unit(rng) * (hi - lo) : i * slot + std::max(0.0, (slot - d) / 2.0);
      start = std::floor(start);
      const double end = std::min(start + d, total_s);
      if (end > start) rec.annotations.push_back({start, end});
    }
  }

  // Half are sharp transients, half brief seizure-like rhythmic bursts.
  struct Artifact {
    double start_s;
    double len_s;
    bool rhythmic;
    double hz;
    double amp;
    double phase;
  };
  std::vector<Artifact> artifacts;
  const auto n_art = static_cast<std::size_t>(std::llround(cfg.artifacts_per_hour * cfg.hours));
  for (std::size_t i = 0; i < n_art; ++i) {
    const bool rhythmic = unit(rng) < 0.5;
    const double len = rhythmic ? 0.5 + 2.5 * unit(rng) : 1.0 + 2.0 * unit(rng);
    const double hz = 3.0 + 4.0 * unit(rng);
    const double amp = 0.4 + 0.6 * unit(rng);
    const double phase = unit(rng) * kTwoPi;
    const double start = unit(rng) * std::max(0.0, total_s - len);
    bool clear = true;
    for (const auto& sz : rec.annotations) {
      if (start + len > sz.start_s - kPrecursorLead - 60.0 && start < sz.end_s + 60.0) clear = false;
    }
    if (clear) artifacts.push_back({start, len, rhythmic, hz, amp, phase});
  }

  const std::vector<double> gains = synth_channel_gains(cfg);
  // Patient-level propagation lags between channels; per-seizure rhythm.
  std::vector<double> lag(ch);
  {
    std::mt19937_64 prng(cfg.patient + 0x51ed27ULL);
    std::uniform_real_distribution<double> u(0.0, 0.08);
    for (double& l : lag) l = u(prng);
  }
  struct Rhythm {
    double f_start;
    double f_end;
    double phase;
    double precursor_hz;
  };
  std::vector<Rhythm> rhythm;
  for (std::size_t i = 0; i < rec.annotations.size(); ++i) {
    rhythm.push_back({6.0 + 2.0 * unit(rng), 2.5 + 1.5 * unit(rng), unit(rng) * kTwoPi,
                      11.0 + 2.0 * unit(rng)});
  }
  std::vector<double> sig(dur);
  rec.samples.resize(ch * dur);
  for (std::size_t c = 0; c < ch; ++c) {
    // Pink-like background: three leaky integrators plus a white floor.
    const double poles[3] = {0.995, 0.95, 0.6};
    double st[3] = {0, 0, 0};
    const double offset = std::round((unit(rng) - 0.5) * 200.0);
    for (std::size_t t = 0; t < dur; ++t) {
      const double w = normal(rng);
      double v = 0.3 * w;
      const double mix[3] = {0.8, 0.6, 0.5};
      for (int k = 0; k < 3; ++k) {
        st[k] = poles[k] * st[k] + std::sqrt(1.0 - poles[k] * poles[k]) * w;
        v += mix[k] * st[k];
      }
      sig[t] = offset + kBackgroundStd / 1.3 * v;
    }

    for (std::size_t z = 0; z < rec.annotations.size(); ++z) {
      const auto& sz = rec.annotations[z];
      const Rhythm& rh = rhythm[z];
      // Precursor: weak rhythm ramping in ahead of the onset.
      const double p0 = std::max(0.0, sz.start_s - kPrecursorLead);
      for (std::size_t t = to_sample_ceil(p0, fs); t < std::min(dur, to_sample_ceil(sz.start_s, fs)); ++t) {
        const double tau = static_cast<double>(t) / fs - p0;
        const double ramp = std::min(1.0, tau / 20.0);
        sig[t] += kPrecursorGain * kBackgroundStd * (0.5 + 0.5 * gains[c]) * ramp *
                  std::sin(kTwoPi * rh.precursor_hz * (tau - lag[c]) + rh.phase);
      }
      // Seizure: downward chirp with harmonics and growing amplitude,
      // reaching each channel after its propagation lag.
      const double d = sz.duration();
      const std::size_t a = to_sample_ceil(sz.start_s, fs);
      const std::size_t b = std::min(dur, to_sample_ceil(sz.end_s, fs));
      for (std::size_t t = a; t < b; ++t) {
        const double tau = static_cast<double>(t - a) / fs - lag[c];
        if (tau <= 0.0) continue;
        const double p = tau / d;
        // Integral of f(tau) = f_start + (f_end - f_start) * tau / d.
        const double phase = rh.phase + kTwoPi * (rh.f_start * tau + 0.5 * (rh.f_end - rh.f_start) * tau * p);
        const double fade = std::min({1.0, tau / 0.5, (d - tau) / 0.5});
        const double env = (0.4 + 0.6 * p) * std::max(0.0, fade);
        const double wave = std::sin(phase) + 0.45 * std::sin(2.0 * phase + 0.3) +
                            0.2 * std::sin(3.0 * phase);
        sig[t] += kSeizureGain * kBackgroundStd * gains[c] * env * wave;
      }
    }
    for (const auto& art : artifacts) {
      const std::size_t a = to_sample_ceil(art.start_s, fs);
      const std::size_t b = std::min(dur, to_sample_ceil(art.start_s + art.len_s, fs));
      if (art.rhythmic) {
        for (std::size_t t = a; t < b; ++t) {
          const double tau = static_cast<double>(t - a) / fs;
          const double fade = std::min({1.0, tau / 0.2, (art.len_s - tau) / 0.2});
          const double phase = art.phase + kTwoPi * art.hz * (tau - lag[c]);
          const double wave = std::sin(phase) + 0.45 * std::sin(2.0 * phase + 0.3) +
                              0.2 * std::sin(3.0 * phase);
          sig[t] += kSeizureGain * kBackgroundStd * gains[c] * art.amp * std::max(0.0, fade) * wave;
        }
        continue;
      }
      // Irregular sharp transients, broadly similar on every channel.
      std::mt19937_64 arng(cfg.seed + static_cast<std::uint64_t>(a));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const std::size_t spikes = 3 + static_cast<std::size_t>(art.len_s * 3.0);
      for (std::size_t k = 0; k < spikes; ++k) {
        const double center = a + u(arng) * static_cast<double>(b - a);
        const double width = 0.01 * fs + u(arng) * 0.03 * fs;
        const double amp = (u(arng) < 0.5 ? -1.0 : 1.0) * (4.0 + 4.0 * u(arng)) * kBackgroundStd;
        const auto lo = static_cast<std::size_t>(std::max(0.0, center - 4 * width));
        const auto hi = std::min(dur, static_cast<std::size_t>(center + 4 * width));
        for (std::size_t t = lo; t < hi; ++t) {
          const double z = (static_cast<double>(t) - center) / width;
          sig[t] += amp * std::exp(-0.5 * z * z);
        }
      }
    }
    for (std::size_t t = 0; t < dur; ++t) {
      const double v = std::clamp(std::round(sig[t]), -32768.0, 32767.0);
      rec.samples[c * dur + t] = static_cast<std::int16_t>(v);
    }
  }
  rec.validate();
  return rec;
}

// Segment archives ------------------------------------------------------------

namespace {
constexpr char kSegMagic[4] = {'E', 'D', 'S', '1'};
constexpr std::uint16_t kSegVersion = 1;
}  // namespace

void save_segments(const SegmentSet& set, const std::filesystem::path& path) {
  detail::ByteWriter w;
  for (char c : kSegMagic) w.put<char>(c);
  w.put<std::uint16_t>(kSegVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(set.fs));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(set.channels.size()));
  for (std::size_t c : set.channels) w.put<std::uint16_t>(static_cast<std::uint16_t>(c));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.samples));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.segments.size()));
  const std::size_t per = set.channels.size() * set.samples;
  for (const Segment& s : set.segments) {
    if (s.data.size() != per) throw Error(Errc::ShapeMismatch, "segment shape differs from archive header");
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.label));
    w.put<double>(s.start_s);
    for (double v : s.data.data) {
      if (v != std::round(v) || v < -32768.0 || v > 32767.0) {
        throw Error(Errc::InvalidArgument, "segment archives hold raw int16 samples only");
      }
      w.put<std::int16_t>(static_cast<std::int16_t>(v));
    }
  }
  w.put_crc();
  detail::write_file(path, w.bytes());
}

SegmentSet load_segments(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  detail::ByteReader r(bytes);
  const auto magic = r.get_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kSegMagic))) {
    throw Error(Errc::BadMagic, path.string() + " is not an EDS1 segment archive");
  }
  if (r.get<std::uint16_t>() != kSegVersion) throw Error(Errc::UnsupportedVersion, "segment archive version");
  SegmentSet set;
  set.fs = r.get<std::uint16_t>();
  const auto k = r.get<std::uint8_t>();
  for (std::size_t i = 0; i < k; ++i) set.channels.push_back(r.get<std::uint16_t>());
  set.samples = r.get<std::uint32_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::size_t i = 0; i < count; ++i) {
    Segment s;
    const auto label = r.get<std::uint8_t>();
    if (label > 2) throw Error(Errc::BadHeader, "segment label code " + std::to_string(label));
    s.label = static_cast<Label>(label);
    s.start_s = r.get<double>();
    s.data = FloatTensor({set.channels.size(), set.samples});
    for (double& v : s.data.data) v = r.get<std::int16_t>();
    set.segments.push_back(std::move(s));
  }
  r.expect_crc();
  return set;
}

}  // namespace edgeseizure
