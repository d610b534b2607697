// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "edgeseizure/layers.hpp"

namespace edgeseizure {

enum class EventKind : std::uint8_t { IctalDetected, PreictalWarning };

std::string_view event_kind_name(EventKind k) noexcept;

struct EventRecord {
  EventKind kind = EventKind::IctalDetected;
  std::size_t segment_index = 0;
  double time_s = 0.0;
  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct WmvParams {
  std::size_t window = 60;  // M, in segments
  double alpha_ictal = 1.0;
  double beta_ictal = 0.5;
  double theta_ictal = 10.0;
  double alpha_preictal = 1.0;
  double beta_preictal = 0.2;
  double theta_preictal = 20.0;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
  friend bool operator==(const WmvParams&, const WmvParams&) = default;
};

struct WmvState {
  double score_ictal = 0.0;
  double score_preictal = 0.0;
  std::size_t acc_ictal = 0;
  std::size_t acc_preictal = 0;
  std::size_t pos = 0;
  friend bool operator==(const WmvState&, const WmvState&) = default;
};

/// Consumes one segment label. Returns the event kind if a threshold was
/// crossed; the state is reset on an event or when the window is exhausted.
std::optional<EventKind> wmv_push(WmvState& state, Label pred, const WmvParams& params) noexcept;

/// Streaming detector that stamps events with segment index and time.
class WmvDetector {
 public:
  explicit WmvDetector(WmvParams params, double stride_s = 1.0);

  /// Scores observed right after this push, before any reset.
  struct Step {
    double score_ictal = 0.0;
    double score_preictal = 0.0;
    std::optional<EventRecord> event;
  };
  Step push(Label pred) noexcept;

  const WmvState& state() const noexcept { return state_; }
  std::size_t consumed() const noexcept { return index_; }

 private:
  WmvParams params_;
  double stride_s_;
  WmvState state_;
  std::size_t index_ = 0;
};

/// Window-at-a-time evaluation of the same voting procedure; reference form
/// for the streaming detector.
std::vector<EventRecord> wmv_batch(std::span<const Label> preds, const WmvParams& params,
                                   double stride_s = 1.0);

/// Trailing-window fraction detector: fires when the share of Ictal (or
/// Preictal) labels among the last `window` exceeds `threshold`, then stays
/// silent until that share no longer exceeds it.
std::vector<EventRecord> moving_average_detector(std::span<const Label> preds, std::size_t window,
                                                 double threshold, double stride_s = 1.0);

}  // namespace edgeseizure
