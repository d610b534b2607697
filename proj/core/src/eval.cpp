// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "edgeseizure/error.hpp"

namespace edgeseizure {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(std::size_t num, std::size_t den) noexcept {
  return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
}

double mean_defined(const std::array<double, kNumClasses>& v) noexcept {
  double sum = 0.0;
  int n = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      sum += x;
      ++n;
    }
  }
  return n == 0 ? kNaN : sum / n;
}

void finish(EventMetrics& m, std::size_t seizures, double hours) noexcept {
  m.fn = seizures - m.tp;
  m.hours = hours;
  m.sensitivity = ratio(m.tp, seizures);
  m.fpr_per_hour = hours > 0.0 ? static_cast<double>(m.fp) / hours : kNaN;
}

}  // namespace

double ConfusionCounts::sensitivity() const noexcept { return ratio(tp, tp + fn); }
double ConfusionCounts::specificity() const noexcept { return ratio(tn, tn + fp); }
double ConfusionCounts::accuracy() const noexcept { return ratio(tp + tn, tp + tn + fp + fn); }

SegmentMetrics segment_metrics(std::span<const LabelPair> pairs) {
  if (pairs.empty()) throw Error(Errc::EmptyInput, "segment metrics need at least one prediction");
  SegmentMetrics m;
  for (const LabelPair& p : pairs) {
    ++m.matrix[static_cast<std::size_t>(p.actual)][static_cast<std::size_t>(p.predicted)];
  }
  m.total = pairs.size();
  std::array<double, kNumClasses> sens{}, spec{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    ConfusionCounts& cc = m.per_class[c];
    for (std::size_t a = 0; a < kNumClasses; ++a) {
      for (std::size_t p = 0; p < kNumClasses; ++p) {
        const std::size_t n = m.matrix[a][p];
        if (a == c && p == c) cc.tp += n;
        else if (a == c) cc.fn += n;
        else if (p == c) cc.fp += n;
        else cc.tn += n;
      }
    }
    m.correct += m.matrix[c][c];
    sens[c] = cc.sensitivity();
    spec[c] = cc.specificity();
  }
  m.accuracy = ratio(m.correct, m.total);
  m.avg_sensitivity = mean_defined(sens);
  m.avg_specificity = mean_defined(spec);
  return m;
}

EventMetrics match_detections(std::span<const EventRecord> events,
                              std::span<const SeizureInterval> seizures, double total_hours,
                              double tolerance_s) {
  EventMetrics m;
  std::vector<bool> hit(seizures.size(), false);
  for (const EventRecord& e : events) {
    if (e.kind != EventKind::IctalDetected) continue;
    bool matched = false;
    bool inside = false;
    for (std::size_t i = 0; i < seizures.size(); ++i) {
      const auto& s = seizures[i];
      if (!hit[i] && !matched && std::abs(e.time_s - s.start_s) <= tolerance_s) {
        hit[i] = true;
        matched = true;
      }
      if (e.time_s >= s.start_s - tolerance_s && e.time_s <= s.end_s + tolerance_s) inside = true;
    }
    if (matched) ++m.tp;
    else if (!inside) ++m.fp;
  }
  finish(m, seizures.size(), total_hours);
  return m;
}

EventMetrics match_predictions(std::span<const EventRecord> events,
                               std::span<const SeizureInterval> seizures, double total_hours,
                               double horizon_s) {
  EventMetrics m;
  std::vector<bool> hit(seizures.size(), false);
  for (const EventRecord& e : events) {
    if (e.kind != EventKind::PreictalWarning) continue;
    bool matched = false;
    bool inside = false;
    for (std::size_t i = 0; i < seizures.size(); ++i) {
      const auto& s = seizures[i];
      if (e.time_s >= s.start_s - horizon_s && e.time_s < s.start_s) {
        inside = true;
        if (!hit[i] && !matched) {
          hit[i] = true;
          matched = true;
        }
      }
    }
    if (matched) ++m.tp;
    else if (!inside) ++m.fp;
  }
  finish(m, seizures.size(), total_hours);
  return m;
}

std::vector<Fold> stratified_kfold(std::span<const Label> labels, std::size_t folds,
                                   std::uint64_t seed) {
  if (folds < 2) throw Error(Errc::InvalidArgument, "need at least 2 folds");
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto name = std::string(label_name(static_cast<Label>(c)));
    if (by_class[c].empty()) throw Error(Errc::MissingClass, "no " + name + " segments");
    if (by_class[c].size() < folds) {
      throw Error(Errc::ClassTooSmall, name + " has " + std::to_string(by_class[c].size()) +
                                           " segments, fewer than " + std::to_string(folds) + " folds");
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<Fold> out(folds);
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t j = 0; j < members.size(); ++j) out[j % folds].validation.push_back(members[j]);
  }
  for (std::size_t f = 0; f < folds; ++f) {
    std::sort(out[f].validation.begin(), out[f].validation.end());
    for (std::size_t g = 0; g < folds; ++g) {
      if (g != f) out[f].train.insert(out[f].train.end(), out[g].validation.begin(), out[g].validation.end());
    }
  }
  for (auto& f : out) std::sort(f.train.begin(), f.train.end());
  return out;
}

std::vector<SectionSplit> loocv_splits(const Recording& rec) {
  const auto& sz = rec.annotations;
  if (sz.size() < 2) throw Error(Errc::InvalidArgument, "LOOCV needs at least 2 seizures");
  std::vector<Span> sections;
  double cursor = 0.0;
  for (std::size_t i = 0; i + 1 < sz.size(); ++i) {
    const double mid = 0.5 * (sz[i].end_s + sz[i + 1].start_s);
    sections.push_back({cursor, mid});
    cursor = mid;
  }
  sections.push_back({cursor, rec.duration_s()});
  std::vector<SectionSplit> out;
  for (std::size_t k = 0; k < sections.size(); ++k) {
    SectionSplit s;
    s.validation = sections[k];
    for (std::size_t j = 0; j < sections.size(); ++j) {
      if (j != k) s.train.push_back(sections[j]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void Report::add(std::string name, std::string value) { entries_.emplace_back(std::move(name), std::move(value)); }
void Report::add(std::string name, double value) { add(std::move(name), format_number(value)); }
void Report::add(std::string name, std::size_t value) { add(std::move(name), std::to_string(value)); }

void Report::add_segment_metrics(const std::string& prefix, const SegmentMetrics& m) {
  add(prefix + "segments", m.total);
  add(prefix + "accuracy", m.accuracy);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::string cls(label_name(static_cast<Label>(c)));
    add(prefix + "sensitivity_" + cls, m.per_class[c].sensitivity());
    add(prefix + "specificity_" + cls, m.per_class[c].specificity());
  }
  add(prefix + "sensitivity_avg", m.avg_sensitivity);
  add(prefix + "specificity_avg", m.avg_specificity);
}

void Report::add_event_metrics(const std::string& prefix, const EventMetrics& m) {
  add(prefix + "tp", m.tp);
  add(prefix + "fp", m.fp);
  add(prefix + "fn", m.fn);
  add(prefix + "hours", m.hours);
  add(prefix + "sensitivity", m.sensitivity);
  add(prefix + "fpr_per_hour", m.fpr_per_hour);
}

void Report::write_kv(std::ostream& os) const {
  for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
}

void Report::write_table(std::ostream& os) const {
  std::size_t width = 0;
  for (const auto& e : entries_) width = std::max(width, e.first.size());
  for (const auto& [k, v] : entries_) {
    os << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  }
}

}  // namespace edgeseizure
