// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/wmv.hpp"

#include <cmath>
#include <string>

#include "edgeseizure/error.hpp"

namespace edgeseizure {

std::string_view event_kind_name(EventKind k) noexcept {
  return k == EventKind::IctalDetected ? "ictal" : "preictal";
}

void WmvParams::validate() const {
  auto check = [](bool ok, const char* field) {
    if (!ok) throw Error(Errc::InvalidArgument, std::string("wmv field '") + field + "' out of range");
  };
  check(window >= 1, "window");
  check(std::isfinite(alpha_ictal) && alpha_ictal >= 0.0, "alpha_ictal");
  check(std::isfinite(beta_ictal) && beta_ictal >= 0.0, "beta_ictal");
  check(std::isfinite(theta_ictal) && theta_ictal > 0.0, "theta_ictal");
  check(std::isfinite(alpha_preictal) && alpha_preictal >= 0.0, "alpha_preictal");
  check(std::isfinite(beta_preictal) && beta_preictal >= 0.0, "beta_preictal");
  check(std::isfinite(theta_preictal) && theta_preictal > 0.0, "theta_preictal");
}

namespace {

void accumulate(WmvState& s, Label pred, const WmvParams& p) noexcept {
  ++s.pos;
  switch (pred) {
    case Label::Ictal:
      s.score_ictal += p.alpha_ictal + p.beta_ictal * static_cast<double>(s.acc_ictal);
      ++s.acc_ictal;
      s.acc_preictal = 0;
      break;
    case Label::Preictal:
      s.score_preictal += p.alpha_preictal + p.beta_preictal * static_cast<double>(s.acc_preictal);
      ++s.acc_preictal;
      s.acc_ictal = 0;
      break;
    case Label::Interictal:
      s.acc_ictal = 0;
      s.acc_preictal = 0;
      break;
  }
}

std::optional<EventKind> settle(WmvState& s, const WmvParams& p) noexcept {
  std::optional<EventKind> event;
  if (s.score_ictal > p.theta_ictal) {
    event = EventKind::IctalDetected;
  } else if (s.score_preictal > p.theta_preictal) {
    event = EventKind::PreictalWarning;
  }
  if (event || s.pos >= p.window) s = WmvState{};
  return event;
}

}  // namespace

std::optional<EventKind> wmv_push(WmvState& s, Label pred, const WmvParams& p) noexcept {
  accumulate(s, pred, p);
  return settle(s, p);
}

WmvDetector::WmvDetector(WmvParams params, double stride_s) : params_(params), stride_s_(stride_s) {
  params_.validate();
  if (!(stride_s > 0.0)) throw Error(Errc::InvalidArgument, "stride must be positive");
}

WmvDetector::Step WmvDetector::push(Label pred) noexcept {
  Step step;
  accumulate(state_, pred, params_);
  step.score_ictal = state_.score_ictal;
  step.score_preictal = state_.score_preictal;
  if (auto kind = settle(state_, params_)) {
    step.event = EventRecord{*kind, index_, static_cast<double>(index_) * stride_s_};
  }
  ++index_;
  return step;
}

std::vector<EventRecord> wmv_batch(std::span<const Label> preds, const WmvParams& p,
                                   double stride_s) {
  std::vector<EventRecord> events;
  std::size_t begin = 0;
  while (begin < preds.size()) {
    double score[2] = {0.0, 0.0};
    std::size_t run[2] = {0, 0};
    std::size_t next = begin + p.window;
    for (std::size_t i = begin; i < begin + p.window && i < preds.size(); ++i) {
      const Label y = preds[i];
      if (y == Label::Ictal || y == Label::Preictal) {
        const int k = y == Label::Ictal ? 0 : 1;
        const double alpha = k == 0 ? p.alpha_ictal : p.alpha_preictal;
        const double beta = k == 0 ? p.beta_ictal : p.beta_preictal;
        score[k] += alpha + beta * static_cast<double>(run[k]);
        ++run[k];
        run[1 - k] = 0;
      } else {
        run[0] = run[1] = 0;
      }
      const bool ictal = score[0] > p.theta_ictal;
      if (ictal || score[1] > p.theta_preictal) {
        events.push_back({ictal ? EventKind::IctalDetected : EventKind::PreictalWarning, i,
                          static_cast<double>(i) * stride_s});
        next = i + 1;
        break;
      }
    }
    begin = next;
  }
  return events;
}

std::vector<EventRecord> moving_average_detector(std::span<const Label> preds, std::size_t window,
                                                 double threshold, double stride_s) {
  if (window < 1) throw Error(Errc::InvalidArgument, "moving-average window must be >= 1");
  std::vector<EventRecord> events;
  std::size_t count[2] = {0, 0};
  bool armed[2] = {true, true};
  const EventKind kinds[2] = {EventKind::IctalDetected, EventKind::PreictalWarning};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == Label::Ictal) ++count[0];
    if (preds[i] == Label::Preictal) ++count[1];
    if (i >= window) {
      if (preds[i - window] == Label::Ictal) --count[0];
      if (preds[i - window] == Label::Preictal) --count[1];
    }
    if (i + 1 < window) continue;
    for (int k = 0; k < 2; ++k) {
      const double frac = static_cast<double>(count[k]) / static_cast<double>(window);
      if (frac > threshold) {
        if (armed[k]) {
          events.push_back({kinds[k], i, static_cast<double>(i) * stride_s});
          armed[k] = false;
        }
      } else {
        armed[k] = true;
      }
    }
  }
  return events;
}

}  // namespace edgeseizure
