// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "edgeseizure/data.hpp"
#include "edgeseizure/models.hpp"
#include "edgeseizure/wmv.hpp"

namespace edgeseizure {

/// Labels for windows starting at k * stride_s, k = 0, 1, ... while the
/// window fits in the recording. Window k is classified independently, so
/// the result does not depend on `threads` (0 = hardware count).
std::vector<Label> classify_stream(const Recording& rec, std::span<const std::size_t> channels,
                                   const WeightBundle& bundle, double stride_s,
                                   std::size_t threads = 1);

struct StreamStep {
  double time_s = 0.0;
  double score_ictal = 0.0;
  double score_preictal = 0.0;
  Label pred = Label::Interictal;
  std::optional<EventRecord> event;
};

/// Feeds labels through a WMV detector, recording scores after each push.
std::vector<StreamStep> run_wmv(std::span<const Label> preds, const WmvParams& params,
                                double stride_s);

std::vector<EventRecord> events_of(std::span<const StreamStep> steps);

}  // namespace edgeseizure
