// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgeseizure/data.hpp"
#include "edgeseizure/layers.hpp"
#include "edgeseizure/wmv.hpp"

namespace edgeseizure {

/// One-vs-rest counts for a single class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// NaN when the denominator is zero.
  double sensitivity() const noexcept;
  double specificity() const noexcept;
  double accuracy() const noexcept;
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct LabelPair {
  Label predicted = Label::Interictal;
  Label actual = Label::Interictal;
};

struct SegmentMetrics {
  /// matrix[actual][predicted]
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> matrix{};
  std::array<ConfusionCounts, kNumClasses> per_class{};
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // correct / total
  /// Means over the classes whose value is defined.
  double avg_sensitivity = 0.0;
  double avg_specificity = 0.0;
};

/// Throws EmptyInput on an empty list.
SegmentMetrics segment_metrics(std::span<const LabelPair> pairs);

struct EventMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double hours = 0.0;
  double sensitivity = 0.0;  // NaN without seizures
  double fpr_per_hour = 0.0;
};

inline constexpr double kDetectionToleranceS = 5.0;
inline constexpr double kPredictionHorizonS = 40.0 * 60.0;

/// Scores IctalDetected events: the first event within the tolerance of a
/// seizure onset is that seizure's hit; events outside every
/// [start - tol, end + tol] are false positives; the rest are ignored.
/// Other event kinds are skipped.
EventMetrics match_detections(std::span<const EventRecord> events,
                              std::span<const SeizureInterval> seizures, double total_hours,
                              double tolerance_s = kDetectionToleranceS);

/// Scores PreictalWarning events against [start - horizon, start) spans.
EventMetrics match_predictions(std::span<const EventRecord> events,
                               std::span<const SeizureInterval> seizures, double total_hours,
                               double horizon_s = kPredictionHorizonS);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Per class, indices are shuffled with the seed and dealt round-robin into
/// folds starting at fold 0. Index lists come back sorted.
/// Throws MissingClass for an absent class, ClassTooSmall when a class has
/// fewer members than folds.
std::vector<Fold> stratified_kfold(std::span<const Label> labels, std::size_t folds,
                                   std::uint64_t seed);

struct SectionSplit {
  Span validation;
  std::vector<Span> train;
};

/// One section per seizure, split at the midpoint between each seizure's
/// end and the next seizure's start. Throws InvalidArgument below 2 seizures.
std::vector<SectionSplit> loocv_splits(const Recording& rec);

/// Ordered `name=value` report. Numbers are printed with fixed formatting so
/// that reports are byte-stable.
class Report {
 public:
  void add(std::string name, std::string value);
  void add(std::string name, double value);
  void add(std::string name, std::size_t value);
  void add(std::string name, int value) { add(std::move(name), static_cast<double>(value)); }

  void add_segment_metrics(const std::string& prefix, const SegmentMetrics& m);
  void add_event_metrics(const std::string& prefix, const EventMetrics& m);

  void write_kv(std::ostream& os) const;
  void write_table(std::ostream& os) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_number(double v);

}  // namespace edgeseizure
