// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgeseizure/layers.hpp"
#include "edgeseizure/qtensor.hpp"

namespace edgeseizure {

struct SeizureInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  double duration() const noexcept { return end_s - start_s; }
  friend bool operator==(const SeizureInterval&, const SeizureInterval&) = default;
};

/// Annotated multichannel recording. Samples are stored channel-major
/// ([channels x duration_samples]) in memory; files are frame-interleaved.
struct Recording {
  int fs = 256;
  std::vector<std::string> channel_names;
  std::size_t duration_samples = 0;
  std::vector<std::int16_t> samples;
  std::vector<SeizureInterval> annotations;

  std::size_t channel_count() const noexcept { return channel_names.size(); }
  double duration_s() const noexcept { return static_cast<double>(duration_samples) / fs; }
  double duration_hours() const noexcept { return duration_s() / 3600.0; }
  std::span<const std::int16_t> channel(std::size_t c) const {
    return std::span<const std::int16_t>(samples).subspan(c * duration_samples, duration_samples);
  }

  /// Throws BadHeader, ChannelCountMismatch, or OverlappingAnnotations.
  void validate() const;

  friend bool operator==(const Recording&, const Recording&) = default;
};

/// Reads a raw int16 LE frame-interleaved signal plus its JSON meta file.
Recording load_recording(const std::filesystem::path& signal_path,
                         const std::filesystem::path& meta_path);
void save_recording(const Recording& rec, const std::filesystem::path& signal_path,
                    const std::filesystem::path& meta_path);

/// Parses only the meta file (annotations, fs, channel names, duration).
Recording load_recording_meta(const std::filesystem::path& meta_path);

/// Copy of [start_s, end_s) with annotations clipped and shifted to the slice.
Recording slice_recording(const Recording& rec, double start_s, double end_s);

/// (1/N) * sum_{t=1}^{N-1} |x(t-1) - x(t)|. Requires N >= 2.
double line_length(std::span<const double> x);
double line_length(std::span<const std::int16_t> x);

/// Mean ictal line length for every channel (index order).
std::vector<double> channel_line_lengths(const Recording& rec);

/// Channels sorted by mean ictal line length, descending; ties keep the lower
/// index first. Returns the first k.
std::vector<std::size_t> rank_channels(const Recording& rec, std::size_t k);

struct Segment {
  FloatTensor data;  // [K x N]
  Label label = Label::Interictal;
  double start_s = 0.0;
};

struct ExtractConfig {
  double seg_seconds = 1.0;
  double preictal_minutes = 3.0;
  double preictal_gap_s = 30.0;
  double interictal_clearance_h = 2.0;
  double ictal_overlap = 0.5;
  /// Interictal windows kept after uniform seeded sampling; 0 keeps all.
  std::size_t max_interictal = 0;
  std::uint64_t seed = 0;
};

/// Time span [start, end) in seconds.
struct Span {
  double start_s = 0.0;
  double end_s = 0.0;
  friend bool operator==(const Span&, const Span&) = default;
};

/// Preictal span for a seizure starting at `seizure_start_s`, before clipping.
Span preictal_span(double seizure_start_s, const ExtractConfig& cfg) noexcept;

/// Regions at least the interictal clearance away from every seizure.
std::vector<Span> interictal_regions(const Recording& rec, const ExtractConfig& cfg);

/// Number of 50%-overlap (or cfg overlap) windows that tile an interval of
/// `interval_samples` with windows of `window_samples`.
std::size_t tiled_window_count(std::size_t interval_samples, std::size_t window_samples,
                               std::size_t hop_samples) noexcept;

/// Copies [K x N] starting at `start_sample` from the chosen channels.
FloatTensor cut_window(const Recording& rec, std::span<const std::size_t> channels,
                       std::size_t start_sample, std::size_t length);

/// Labeled windows: ictal windows tile each seizure with the configured overlap;
/// preictal windows tile (without overlap) the span ending `preictal_gap_s`
/// before each onset; interictal windows tile regions clear of every seizure.
/// Windows that would cross a region boundary are dropped. Output is sorted
/// by start time within each class, ictal first.
std::vector<Segment> extract_segments(const Recording& rec,
                                      std::span<const std::size_t> channels,
                                      const ExtractConfig& cfg);

std::array<std::size_t, kNumClasses> class_counts(std::span<const Segment> segments) noexcept;

// Synthetic recordings --------------------------------------------------------

struct SynthConfig {
  /// Drives noise, seizure timing and artifacts.
  std::uint64_t seed = 0;
  /// Drives the per-channel seizure gains, so recordings of one synthetic
  /// patient share their channel ranking.
  std::uint64_t patient = 0;
  double hours = 1.0;
  std::size_t seizure_count = 1;
  std::size_t channels = 9;
  int fs = 256;
  double seizure_min_s = 20.0;
  double seizure_max_s = 60.0;
  /// Unannotated events per hour: sharp transients and brief seizure-like
  /// rhythmic bursts in equal odds.
  double artifacts_per_hour = 4.0;
};

/// Per-channel seizure gain used by `synth_generate`: a seeded permutation
/// of evenly spaced gains in [0.15, 1] (deterministic per patient).
std::vector<double> synth_channel_gains(const SynthConfig& cfg);

/// Pink-like background noise, amplitude-growing oscillatory seizures with
/// channel-dependent gain, and a weak rhythmic precursor before each onset.
/// Seizures are placed one per equal time slot. Deterministic per seed.
Recording synth_generate(const SynthConfig& cfg);

// Segment archives ------------------------------------------------------------

/// Labeled segments with the recording channels they were cut from.
struct SegmentSet {
  int fs = 256;
  std::vector<std::size_t> channels;
  std::size_t samples = 0;  // N
  std::vector<Segment> segments;
};

void save_segments(const SegmentSet& set, const std::filesystem::path& path);
SegmentSet load_segments(const std::filesystem::path& path);

}  // namespace edgeseizure
