// SPDX-License-Identifier: Apache-2.0
#include "edgeseizure/stream.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "edgeseizure/error.hpp"

namespace edgeseizure {

std::vector<Label> classify_stream(const Recording& rec, std::span<const std::size_t> channels,
                                   const WeightBundle& bundle, double stride_s,
                                   std::size_t threads) {
  const ModelSpec& spec = bundle.spec;
  if (channels.size() != spec.channels) {
    throw Error(Errc::ChannelCountMismatch, "model expects " + std::to_string(spec.channels) +
                                                " channels, got " + std::to_string(channels.size()));
  }
  if (rec.fs != spec.fs) {
    throw Error(Errc::InvalidArgument, "recording fs " + std::to_string(rec.fs) +
                                           " differs from model fs " + std::to_string(spec.fs));
  }
  for (std::size_t c : channels) {
    if (c >= rec.channel_count()) throw Error(Errc::InvalidArgument, "channel index out of range");
  }
  const double hop_samples = stride_s * rec.fs;
  if (!(stride_s > 0.0) || std::abs(hop_samples - std::round(hop_samples)) > 1e-9 || hop_samples < 1.0) {
    throw Error(Errc::InvalidArgument, "stride must be a positive whole number of samples");
  }
  const auto hop = static_cast<std::size_t>(std::llround(hop_samples));
  const std::size_t n = spec.samples;
  const std::size_t count = tiled_window_count(rec.duration_samples, n, hop);
  std::vector<Label> labels(count, Label::Interictal);

  auto work = [&](std::size_t first, std::size_t step) {
    InferenceWorkspace ws;
    std::vector<double> window(channels.size() * n);
    for (std::size_t k = first; k < count; k += step) {
      for (std::size_t c = 0; c < channels.size(); ++c) {
        const auto src = rec.channel(channels[c]).subspan(k * hop, n);
        std::copy(src.begin(), src.end(), window.begin() + static_cast<std::ptrdiff_t>(c * n));
      }
      labels[k] = infer_segment(bundle, window, ws).label;
    }
  };
  std::size_t workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    auto guarded = [&](std::size_t w) {
      try {
        work(w, workers);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(guarded, w);
    guarded(0);
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return labels;
}

std::vector<StreamStep> run_wmv(std::span<const Label> preds, const WmvParams& params,
                                double stride_s) {
  WmvDetector det(params, stride_s);
  std::vector<StreamStep> steps;
  steps.reserve(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto s = det.push(preds[k]);
    steps.push_back({static_cast<double>(k) * stride_s, s.score_ictal, s.score_preictal, preds[k], s.event});
  }
  return steps;
}

std::vector<EventRecord> events_of(std::span<const StreamStep> steps) {
  std::vector<EventRecord> out;
  for (const auto& s : steps) {
    if (s.event) out.push_back(*s.event);
  }
  return out;
}

}  // namespace edgeseizure
