// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "edgeseizure/cost.hpp"
#include "edgeseizure/data.hpp"
#include "edgeseizure/error.hpp"
#include "edgeseizure/eval.hpp"
#include "edgeseizure/models.hpp"
#include "edgeseizure/quantizer.hpp"
#include "edgeseizure/stream.hpp"
#include "edgeseizure/trainer.hpp"
#include "edgeseizure/wmv.hpp"

namespace edgeseizure::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config file -----------------------------------------------------------------

struct ConfigFile {
  std::optional<json> wmv;
  std::optional<json> train;
};

void apply_wmv_config(const json& obj, WmvParams& p);
void apply_train_config(const json& obj, TrainConfig& c);

// Both sections are checked whichever command reads the file.
ConfigFile load_config(const std::string& path) {
  ConfigFile cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw DataError("config: cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw DataError("config: " + path + ": " + e.what());
  }
  if (!root.is_object()) throw DataError("config: top level must be an object");
  for (const auto& [key, value] : root.items()) {
    if (!value.is_object()) throw DataError("config: field '" + key + "' must be an object");
    if (key == "wmv") {
      cfg.wmv = value;
    } else if (key == "train") {
      cfg.train = value;
    } else {
      throw DataError("config: unknown field '" + key + "'");
    }
  }
  WmvParams wmv_probe;
  TrainConfig train_probe;
  if (cfg.wmv) apply_wmv_config(*cfg.wmv, wmv_probe);
  if (cfg.train) apply_train_config(*cfg.train, train_probe);
  return cfg;
}

template <typename T>
void read_field(const json& obj, const std::string& section, const std::string& key, T& dst) {
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError("config: field '" + section + "." + key + "' has the wrong type");
  }
}

void apply_wmv_config(const json& obj, WmvParams& p) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (key == "window") {
      read_field(obj, "wmv", key, p.window);
    } else if (key == "alpha_ictal") {
      read_field(obj, "wmv", key, p.alpha_ictal);
    } else if (key == "beta_ictal") {
      read_field(obj, "wmv", key, p.beta_ictal);
    } else if (key == "theta_ictal") {
      read_field(obj, "wmv", key, p.theta_ictal);
    } else if (key == "alpha_preictal") {
      read_field(obj, "wmv", key, p.alpha_preictal);
    } else if (key == "beta_preictal") {
      read_field(obj, "wmv", key, p.beta_preictal);
    } else if (key == "theta_preictal") {
      read_field(obj, "wmv", key, p.theta_preictal);
    } else {
      throw DataError("config: unknown field 'wmv." + key + "'");
    }
  }
}

void apply_train_config(const json& obj, TrainConfig& c) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (key == "learning_rate") {
      read_field(obj, "train", key, c.learning_rate);
    } else if (key == "beta1") {
      read_field(obj, "train", key, c.beta1);
    } else if (key == "beta2") {
      read_field(obj, "train", key, c.beta2);
    } else if (key == "epsilon") {
      read_field(obj, "train", key, c.epsilon);
    } else if (key == "epochs") {
      read_field(obj, "train", key, c.epochs);
    } else if (key == "batch_size") {
      read_field(obj, "train", key, c.batch_size);
    } else if (key == "class_weights") {
      read_field(obj, "train", key, c.class_weights);
    } else if (key == "balance_classes") {
      read_field(obj, "train", key, c.balance_classes);
    } else if (key == "threads") {
      read_field(obj, "train", key, c.threads);
    } else {
      throw DataError("config: unknown field 'train." + key + "'");
    }
  }
}

// Shared options ----------------------------------------------------------------

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string report;
  std::string format = "kv";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every random choice (default 0)");
  sub->add_option("--config", c.config,
                  "JSON file with optional \"wmv\" and \"train\" objects; flags override it");
  sub->add_option("--report", c.report, "Write the report here instead of stdout");
  sub->add_option("--format", c.format, "Report layout: kv (name=value) or table")
      ->check(CLI::IsMember({"kv", "table"}));
}

void emit(const Report& report, const Common& c, std::ostream& out) {
  auto write = [&](std::ostream& os) {
    if (c.format == "table") {
      report.write_table(os);
    } else {
      report.write_kv(os);
    }
  };
  if (c.report.empty()) {
    write(out);
    return;
  }
  std::ofstream f(c.report, std::ios::binary);
  if (!f) throw DataError("cannot write report " + c.report);
  write(f);
}

struct RecordingPaths {
  fs::path signal;
  fs::path meta;
};

RecordingPaths recording_paths(const std::string& prefix) {
  std::string base = prefix;
  for (const char* ext : {".sig", ".json"}) {
    const std::string e(ext);
    if (base.size() > e.size() && base.compare(base.size() - e.size(), e.size(), e) == 0) {
      base.resize(base.size() - e.size());
      break;
    }
  }
  return {base + ".sig", base + ".json"};
}

Recording read_recording(const std::string& prefix) {
  const auto p = recording_paths(prefix);
  return load_recording(p.signal, p.meta);
}

std::vector<std::size_t> parse_channel_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("--channels: '" + item + "' is not a channel index");
    }
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  if (out.empty()) throw UsageError("--channels: empty list");
  return out;
}

std::string join(std::span<const std::size_t> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

struct ChannelChoice {
  std::string list;
  std::size_t k = 9;
};

void add_channel_options(CLI::App* sub, ChannelChoice& c, const char* k_help) {
  sub->add_option("--channels", c.list, "Comma-separated channel indices (overrides --k)");
  sub->add_option("--k", c.k, k_help)->check(CLI::PositiveNumber);
}

std::vector<std::size_t> resolve_channels(const ChannelChoice& c, const Recording& rec) {
  if (!c.list.empty()) {
    auto ch = parse_channel_list(c.list);
    for (const auto idx : ch) {
      if (idx >= rec.channel_count()) {
        throw DataError("--channels: index " + std::to_string(idx) + " exceeds recording channels");
      }
    }
    return ch;
  }
  return rank_channels(rec, std::min(c.k, rec.channel_count()));
}

void add_extract_options(CLI::App* sub, ExtractConfig& e) {
  sub->add_option("--seconds", e.seg_seconds, "Segment length in seconds (default 1)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--preictal-minutes", e.preictal_minutes, "Preictal span length (default 3)");
  sub->add_option("--preictal-gap", e.preictal_gap_s,
                  "Seconds between the preictal span and onset (default 30)");
  sub->add_option("--clearance-hours", e.interictal_clearance_h,
                  "Interictal distance from any seizure (default 2)");
  sub->add_option("--overlap", e.ictal_overlap, "Ictal window overlap in [0,1) (default 0.5)");
  sub->add_option("--max-interictal", e.max_interictal,
                  "Keep at most this many interictal windows, sampled by seed (0 = all)");
}

struct TrainOptions {
  TrainConfig cfg;
  std::string family = "cnn";
  CLI::Option* epochs = nullptr;
  CLI::Option* batch = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* threads = nullptr;
  CLI::Option* no_balance = nullptr;
  std::size_t epochs_v = 0;
  std::size_t batch_v = 0;
  double lr_v = 0.0;
  std::size_t threads_v = 1;
  bool no_balance_v = false;
};

void add_train_options(CLI::App* sub, TrainOptions& t) {
  sub->add_option("--family", t.family, "Model family: dnn, cnn or lstm (default cnn)")
      ->check(CLI::IsMember({"dnn", "cnn", "lstm"}, CLI::ignore_case));
  t.epochs = sub->add_option("--epochs", t.epochs_v, "Training epochs (default 30)");
  t.batch = sub->add_option("--batch-size", t.batch_v, "Mini-batch size (default 32)");
  t.lr = sub->add_option("--lr", t.lr_v, "Adam learning rate (default 1e-3)");
  t.threads = sub->add_option("--train-threads", t.threads_v,
                              "Threads for per-sample gradients (default 1, 0 = all cores)");
  t.no_balance = sub->add_flag("--no-balance", t.no_balance_v,
                               "Use unit class weights instead of inverse frequency");
}

TrainConfig resolve_train(TrainOptions& t, const ConfigFile& config, std::uint64_t seed) {
  TrainConfig c;
  if (config.train) apply_train_config(*config.train, c);
  if (t.epochs->count()) c.epochs = t.epochs_v;
  if (t.batch->count()) c.batch_size = t.batch_v;
  if (t.lr->count()) c.learning_rate = t.lr_v;
  if (t.threads->count()) c.threads = t.threads_v;
  if (t.no_balance->count()) c.balance_classes = false;
  c.rng_seed = seed;
  try {
    c.validate();
  } catch (const Error& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  return c;
}

struct WmvOptions {
  std::vector<std::pair<CLI::Option*, double*>> set;
  std::size_t window = 0;
  CLI::Option* window_opt = nullptr;
  double values[6] = {};
};

void add_wmv_options(CLI::App* sub, WmvOptions& w) {
  w.window_opt = sub->add_option("--window", w.window, "WMV window M in segments (default 60)");
  const char* names[6] = {"--alpha-ictal",    "--beta-ictal",    "--theta-ictal",
                          "--alpha-preictal", "--beta-preictal", "--theta-preictal"};
  const char* helps[6] = {"Ictal vote weight (default 1)",     "Ictal run weight (default 0.5)",
                          "Ictal threshold (default 10)",      "Preictal vote weight (default 1)",
                          "Preictal run weight (default 0.2)", "Preictal threshold (default 20)"};
  for (int i = 0; i < 6; ++i) {
    w.set.emplace_back(sub->add_option(names[i], w.values[i], helps[i]), &w.values[i]);
  }
}

WmvParams resolve_wmv(const WmvOptions& w, const ConfigFile& config) {
  WmvParams p;
  if (config.wmv) apply_wmv_config(*config.wmv, p);
  if (w.window_opt->count()) p.window = w.window;
  double* fields[6] = {&p.alpha_ictal,    &p.beta_ictal,    &p.theta_ictal,
                       &p.alpha_preictal, &p.beta_preictal, &p.theta_preictal};
  for (std::size_t i = 0; i < 6; ++i) {
    if (w.set[i].first->count()) *fields[i] = *w.set[i].second;
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw DataError(std::string("wmv config: ") + e.what());
  }
  return p;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
  if (!f) throw DataError("write failed: " + path);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the
// first failure in index order.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Events CSV --------------------------------------------------------------------

std::string events_csv(std::span<const EventRecord> events) {
  std::string s = "kind,segment_index,time_s\n";
  for (const auto& e : events) {
    s += std::string(event_kind_name(e.kind)) + ',' + std::to_string(e.segment_index) + ',' +
         format_number(e.time_s) + '\n';
  }
  return s;
}

std::vector<EventRecord> read_events_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open events file " + path);
  std::vector<EventRecord> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("kind", 0) == 0) continue;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string kind, index, time;
    if (!std::getline(ss, kind, ',') || !std::getline(ss, index, ',') ||
        !std::getline(ss, time)) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected kind,segment_index,time_s");
    }
    EventRecord e;
    if (kind == "ictal") {
      e.kind = EventKind::IctalDetected;
    } else if (kind == "preictal") {
      e.kind = EventKind::PreictalWarning;
    } else {
      throw DataError(path + ":" + std::to_string(lineno) + ": field 'kind' must be ictal or preictal");
    }
    try {
      e.segment_index = static_cast<std::size_t>(std::stoull(index));
      e.time_s = std::stod(time);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad number");
    }
    events.push_back(e);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const EventRecord& a, const EventRecord& b) { return a.time_s < b.time_s; });
  return events;
}

// Subcommands -------------------------------------------------------------------

int cmd_synth(const Common& c, SynthConfig cfg, const std::string& out_prefix, std::ostream& out) {
  cfg.seed = c.seed;
  const Recording rec = synth_generate(cfg);
  const auto p = recording_paths(out_prefix);
  save_recording(rec, p.signal, p.meta);
  Report r;
  r.add("signal", p.signal.string());
  r.add("meta", p.meta.string());
  r.add("channels", rec.channel_count());
  r.add("fs", rec.fs);
  r.add("duration_s", rec.duration_s());
  r.add("seizures", rec.annotations.size());
  for (std::size_t i = 0; i < rec.annotations.size(); ++i) {
    const std::string k = "seizure" + std::to_string(i + 1);
    r.add(k + "_start_s", rec.annotations[i].start_s);
    r.add(k + "_end_s", rec.annotations[i].end_s);
  }
  emit(r, c, out);
  return kExitOk;
}

int cmd_rank(const Common& c, const std::string& recording, std::size_t k, std::ostream& out) {
  const Recording rec = read_recording(recording);
  const auto ll = channel_line_lengths(rec);
  const auto ranked = rank_channels(rec, k == 0 ? rec.channel_count() : std::min(k, rec.channel_count()));
  Report r;
  r.add("channels", join(ranked));
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const std::string key = "rank" + std::to_string(i + 1);
    r.add(key + "_index", ranked[i]);
    r.add(key + "_name", rec.channel_names[ranked[i]]);
    r.add(key + "_line_length", ll[ranked[i]]);
  }
  emit(r, c, out);
  return kExitOk;
}

int cmd_segment(const Common& c, const std::string& recording, const ChannelChoice& ch,
                ExtractConfig ec, const std::string& out_path, std::ostream& out) {
  const Recording rec = read_recording(recording);
  ec.seed = c.seed;
  SegmentSet set;
  set.fs = rec.fs;
  set.channels = resolve_channels(ch, rec);
  set.samples = samples_for(rec.fs, ec.seg_seconds);
  set.segments = extract_segments(rec, set.channels, ec);
  save_segments(set, out_path);
  const auto counts = class_counts(set.segments);
  Report r;
  r.add("channels", join(set.channels));
  r.add("samples", set.samples);
  r.add("segments", set.segments.size());
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    r.add(std::string("count_") + std::string(label_name(static_cast<Label>(i))), counts[i]);
  }
  emit(r, c, out);
  return kExitOk;
}

int cmd_train(const Common& c, TrainOptions& t, const std::string& segments_path,
              const std::string& out_path, bool init_only, int fs, std::size_t channels,
              double seconds, std::ostream& out) {
  const ConfigFile config = load_config(c.config);
  const TrainConfig cfg = resolve_train(t, config, c.seed);
  const Family family = parse_family(t.family);
  Report r;
  r.add("family", std::string(family_name(family)));
  if (init_only) {
    ModelSpec spec;
    if (!segments_path.empty()) {
      const SegmentSet set = load_segments(segments_path);
      spec = build_model(family, set.fs, set.channels.size(), set.samples);
    } else {
      spec = build_model(family, fs, channels, samples_for(fs, seconds));
    }
    save_weights(init_weights(spec, c.seed), out_path);
    r.add("weights", out_path);
    r.add("initialized", std::string("glorot"));
    emit(r, c, out);
    return kExitOk;
  }
  if (segments_path.empty()) throw UsageError("train: --segments is required unless --init-only");
  const SegmentSet set = load_segments(segments_path);
  const ModelSpec spec = build_model(family, set.fs, set.channels.size(), set.samples);
  const TrainResult result = train_model(spec, set.segments, cfg);
  save_weights(result.bundle, out_path);
  r.add("weights", out_path);
  r.add("segments", set.segments.size());
  r.add("epochs", cfg.epochs);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    r.add(std::string("class_weight_") + std::string(label_name(static_cast<Label>(i))),
          result.class_weights[i]);
  }
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
    r.add("loss_epoch" + std::to_string(e + 1), result.loss_curve[e]);
  }
  std::vector<LabelPair> pairs;
  InferenceWorkspace ws;
  for (const auto& s : set.segments) {
    pairs.push_back({infer_segment(result.bundle, s.data.data, ws).label, s.label});
  }
  r.add_segment_metrics("train_", segment_metrics(pairs));
  emit(r, c, out);
  return kExitOk;
}

int cmd_quantize(const Common& c, const std::string& weights, const std::string& out_path,
                 const std::string& segments_path, std::ostream& out) {
  const WeightBundle fb = load_weights(weights);
  if (fb.precision != Precision::Float32) throw DataError("quantize: input weights are already quantized");
  const WeightBundle qb = quantize_model(fb);
  save_weights(qb, out_path);
  Report r;
  r.add("weights", out_path);
  r.add("family", std::string(family_name(qb.spec.family)));
  const auto cost8 = model_cost(qb.spec, 8, 16);
  const auto cost16 = model_cost(qb.spec, 16, 16);
  r.add("weight_bytes_8bit", cost8.weight_bytes);
  r.add("weight_bytes_16bit", cost16.weight_bytes);
  if (!segments_path.empty()) {
    const SegmentSet set = load_segments(segments_path);
    add_degradation_report(r, degradation_report(fb, qb, set.segments));
  }
  emit(r, c, out);
  return kExitOk;
}

struct StreamArgs {
  std::string recording;
  std::string weights;
  std::string segments;
  std::string channels;
  double stride = 0.5;
  std::string csv;
  std::string events;
  std::size_t threads = 1;
};

int cmd_stream(const Common& c, const StreamArgs& a, const WmvOptions& w, std::ostream& out) {
  const ConfigFile config = load_config(c.config);
  const WmvParams params = resolve_wmv(w, config);
  const Recording rec = read_recording(a.recording);
  const WeightBundle bundle = load_weights(a.weights);
  std::vector<std::size_t> channels;
  if (!a.channels.empty()) {
    channels = parse_channel_list(a.channels);
  } else if (!a.segments.empty()) {
    channels = load_segments(a.segments).channels;
  } else {
    for (std::size_t i = 0; i < bundle.spec.channels; ++i) channels.push_back(i);
  }
  for (const auto idx : channels) {
    if (idx >= rec.channel_count()) {
      throw DataError("stream: channel " + std::to_string(idx) + " exceeds recording channels");
    }
  }
  const auto preds = classify_stream(rec, channels, bundle, a.stride, a.threads);
  const auto steps = run_wmv(preds, params, a.stride);
  const auto events = events_of(steps);

  if (!a.csv.empty()) {
    std::string s = "time_s,score_ictal,score_preictal,pred_label,event\n";
    for (const auto& st : steps) {
      s += format_number(st.time_s) + ',' + format_number(st.score_ictal) + ',' +
           format_number(st.score_preictal) + ',' + std::string(label_name(st.pred)) + ',' +
           (st.event ? std::string(event_kind_name(st.event->kind)) : std::string()) + '\n';
    }
    write_text_file(a.csv, s);
  }
  if (!a.events.empty()) write_text_file(a.events, events_csv(events));

  Report r;
  r.add("channels", join(channels));
  r.add("stride_s", a.stride);
  r.add("segments", steps.size());
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto p : preds) ++counts[static_cast<std::size_t>(p)];
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    r.add(std::string("pred_") + std::string(label_name(static_cast<Label>(i))), counts[i]);
  }
  r.add("events", events.size());
  r.add_event_metrics("detection_", match_detections(events, rec.annotations, rec.duration_hours()));
  r.add_event_metrics("prediction_", match_predictions(events, rec.annotations, rec.duration_hours()));
  emit(r, c, out);
  return kExitOk;
}

int cmd_eval(const Common& c, const std::string& events_path, const std::string& recording,
             double tolerance, double horizon, std::ostream& out) {
  const Recording meta = load_recording_meta(recording_paths(recording).meta);
  const auto events = read_events_csv(events_path);
  Report r;
  r.add("events", events.size());
  r.add("seizures", meta.annotations.size());
  r.add_event_metrics("detection_",
                      match_detections(events, meta.annotations, meta.duration_hours(), tolerance));
  r.add_event_metrics("prediction_",
                      match_predictions(events, meta.annotations, meta.duration_hours(), horizon));
  emit(r, c, out);
  return kExitOk;
}

struct CvArgs {
  std::string mode = "kfold";
  std::string segments;
  std::string recording;
  ChannelChoice channels;
  ExtractConfig extract;
  std::size_t folds = 10;
  std::size_t threads = 1;
  double stride = 0.5;
  std::string precision = "quantized";
};

int cv_kfold(const Common& c, const CvArgs& a, const TrainConfig& tc, Family family,
             std::ostream& out) {
  if (a.segments.empty()) throw UsageError("cv kfold: --segments is required");
  const SegmentSet set = load_segments(a.segments);
  std::vector<Label> labels;
  for (const auto& s : set.segments) labels.push_back(s.label);
  const auto folds = stratified_kfold(labels, a.folds, c.seed);
  const ModelSpec spec = build_model(family, set.fs, set.channels.size(), set.samples);

  std::vector<DegradationReport> results(folds.size());
  parallel_for(folds.size(), a.threads, [&](std::size_t i) {
    std::vector<Segment> train, val;
    for (const auto idx : folds[i].train) train.push_back(set.segments[idx]);
    for (const auto idx : folds[i].validation) val.push_back(set.segments[idx]);
    TrainConfig cfg = tc;
    cfg.threads = 1;
    const WeightBundle fb = train_model(spec, train, cfg).bundle;
    results[i] = degradation_report(fb, quantize_model(fb), val);
  });

  Report r;
  r.add("mode", std::string("kfold"));
  r.add("folds", folds.size());
  double acc_f = 0.0, acc_q = 0.0, sens = 0.0, spec_avg = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string p = "fold" + std::to_string(i + 1) + "_";
    r.add_segment_metrics(p, results[i].quant_metrics);
    r.add(p + "accuracy_float", results[i].accuracy_float);
    acc_f += results[i].accuracy_float;
    acc_q += results[i].accuracy_quant;
    sens += results[i].quant_metrics.avg_sensitivity;
    spec_avg += results[i].quant_metrics.avg_specificity;
  }
  const double n = static_cast<double>(results.size());
  r.add("mean_accuracy_float", acc_f / n);
  r.add("mean_accuracy_quant", acc_q / n);
  r.add("mean_sensitivity_avg", sens / n);
  r.add("mean_specificity_avg", spec_avg / n);
  emit(r, c, out);
  return kExitOk;
}

int cv_loocv(const Common& c, const CvArgs& a, const TrainConfig& tc, const WmvParams& wp,
             Family family, std::ostream& out) {
  if (a.recording.empty()) throw UsageError("cv loocv: --recording is required");
  const Recording rec = read_recording(a.recording);
  const auto channels = resolve_channels(a.channels, rec);
  const auto splits = loocv_splits(rec);
  ExtractConfig ec = a.extract;
  ec.seed = c.seed;
  const ModelSpec spec =
      build_model(family, rec.fs, channels.size(), samples_for(rec.fs, ec.seg_seconds));

  struct FoldResult {
    EventMetrics detection;
    EventMetrics prediction;
  };
  std::vector<FoldResult> results(splits.size());
  parallel_for(splits.size(), a.threads, [&](std::size_t i) {
    std::vector<Segment> train;
    for (const auto& span : splits[i].train) {
      const Recording part = slice_recording(rec, span.start_s, span.end_s);
      for (auto& s : extract_segments(part, channels, ec)) {
        s.start_s += span.start_s;
        train.push_back(std::move(s));
      }
    }
    TrainConfig cfg = tc;
    cfg.threads = 1;
    WeightBundle bundle = train_model(spec, train, cfg).bundle;
    if (a.precision == "quantized") bundle = quantize_model(bundle);
    const Recording val =
        slice_recording(rec, splits[i].validation.start_s, splits[i].validation.end_s);
    const auto preds = classify_stream(val, channels, bundle, a.stride, 1);
    const auto events = events_of(run_wmv(preds, wp, a.stride));
    results[i] = {match_detections(events, val.annotations, val.duration_hours()),
                  match_predictions(events, val.annotations, val.duration_hours())};
  });

  Report r;
  r.add("mode", std::string("loocv"));
  r.add("channels", join(channels));
  r.add("folds", splits.size());
  EventMetrics det_total, pred_total;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string p = "fold" + std::to_string(i + 1) + "_";
    r.add(p + "validation_start_s", splits[i].validation.start_s);
    r.add(p + "validation_end_s", splits[i].validation.end_s);
    r.add_event_metrics(p + "detection_", results[i].detection);
    r.add_event_metrics(p + "prediction_", results[i].prediction);
    for (auto [total, m] : {std::pair{&det_total, &results[i].detection},
                            std::pair{&pred_total, &results[i].prediction}}) {
      total->tp += m->tp;
      total->fp += m->fp;
      total->fn += m->fn;
      total->hours += m->hours;
    }
  }
  for (auto* t : {&det_total, &pred_total}) {
    const auto seizures = t->tp + t->fn;
    t->sensitivity = seizures ? static_cast<double>(t->tp) / static_cast<double>(seizures) : std::nan("");
    t->fpr_per_hour = t->hours > 0.0 ? static_cast<double>(t->fp) / t->hours : std::nan("");
  }
  r.add_event_metrics("total_detection_", det_total);
  r.add_event_metrics("total_prediction_", pred_total);
  emit(r, c, out);
  return kExitOk;
}

struct CostArgs {
  std::string family = "cnn";
  std::string weights;
  int fs = 256;
  std::size_t channels = 0;  // 0 = family default
  double seconds = 1.0;
  int coef_bits = 8;
  int act_bits = 16;
  bool instrumented = false;
  std::size_t bench = 0;
};

int cmd_cost(const Common& c, const CostArgs& a, bool seconds_given, std::ostream& out) {
  WeightBundle bundle;
  if (!a.weights.empty()) {
    bundle = load_weights(a.weights);
  } else {
    const Family family = parse_family(a.family);
    double seconds = a.seconds;
    if (!seconds_given) {
      seconds = family == Family::DNN ? 0.5 : family == Family::CNN ? 1.0 : 2.0;
    }
    const std::size_t channels = a.channels > 0 ? a.channels : family == Family::DNN ? 5 : 9;
    bundle = init_weights(build_model(family, a.fs, channels, samples_for(a.fs, seconds)), c.seed);
  }
  const auto& spec = bundle.spec;
  Report r;
  r.add("family", std::string(family_name(spec.family)));
  r.add("input_channels", spec.channels);
  r.add("input_samples", spec.samples);
  const CostReport cost = model_cost(spec, a.coef_bits, a.act_bits);
  add_cost_report(r, cost);
  if (a.instrumented || a.bench > 0) {
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> noise(0.0, 40.0);
    FloatTensor seg({spec.channels, spec.samples});
    for (auto& v : seg.data) v = noise(rng);
    if (a.instrumented) r.add("macs_instrumented_conv_fc", instrumented_count(bundle, seg.data));
    if (a.bench > 0) {
      const auto timing = bench_inference(bundle, std::span<const FloatTensor>(&seg, 1), a.bench);
      r.add("bench_repetitions", timing.repetitions);
      r.add("bench_median_us", timing.median_us);
      r.add("bench_p95_us", timing.p95_us);
      r.add("bench_min_us", timing.min_us);
    }
  }
  emit(r, c, out);
  return kExitOk;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantized EEG seizure detection: data, training, quantization and evaluation",
               "edgeseizure"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // synth
  Common synth_c;
  SynthConfig synth_cfg;
  synth_cfg.hours = 1.0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated recording");
  add_common(synth, synth_c);
  synth->add_option("--out", synth_out, "Output prefix; writes PREFIX.sig and PREFIX.json")->required();
  synth->add_option("--hours", synth_cfg.hours, "Duration in hours (default 1)")->check(CLI::PositiveNumber);
  synth->add_option("--seizures", synth_cfg.seizure_count, "Number of seizures (default 1)");
  synth->add_option("--channels", synth_cfg.channels, "Channel count (default 9)")->check(CLI::PositiveNumber);
  synth->add_option("--fs", synth_cfg.fs, "Sampling rate in Hz (default 256)")->check(CLI::PositiveNumber);
  synth->add_option("--patient", synth_cfg.patient,
                    "Patient seed fixing channel gains and lags (default 0)");
  synth->add_option("--seizure-min", synth_cfg.seizure_min_s, "Shortest seizure in s (default 20)");
  synth->add_option("--seizure-max", synth_cfg.seizure_max_s, "Longest seizure in s (default 60)");
  synth->add_option("--artifacts-per-hour", synth_cfg.artifacts_per_hour,
                    "Unannotated transients and bursts per hour (default 4)");

  // rank
  Common rank_c;
  std::string rank_rec;
  std::size_t rank_k = 0;
  auto* rank = app.add_subcommand("rank", "Rank channels by mean ictal line length");
  add_common(rank, rank_c);
  rank->add_option("--recording", rank_rec, "Recording prefix (PREFIX.sig + PREFIX.json)")->required();
  rank->add_option("--k", rank_k, "Report the top k channels (default all)");

  // segment
  Common seg_c;
  std::string seg_rec, seg_out;
  ChannelChoice seg_ch;
  ExtractConfig seg_cfg;
  auto* segment = app.add_subcommand("segment", "Extract labeled segments into an archive");
  add_common(segment, seg_c);
  segment->add_option("--recording", seg_rec, "Recording prefix")->required();
  segment->add_option("--out", seg_out, "Segment archive to write")->required();
  add_channel_options(segment, seg_ch, "Use the top k ranked channels (default 9)");
  add_extract_options(segment, seg_cfg);

  // train
  Common train_c;
  TrainOptions train_t;
  std::string train_segments, train_out;
  bool train_init_only = false;
  int train_fs = 256;
  std::size_t train_channels = 9;
  double train_seconds = 1.0;
  auto* train = app.add_subcommand("train", "Train a DNN or CNN and write a float weight file");
  add_common(train, train_c);
  train->add_option("--segments", train_segments, "Segment archive from `segment`");
  train->add_option("--out", train_out, "Weight file to write")->required();
  add_train_options(train, train_t);
  train->add_flag("--init-only", train_init_only,
                  "Write seeded initial weights without training (any family)");
  train->add_option("--fs", train_fs, "With --init-only and no --segments: sampling rate (default 256)");
  train->add_option("--channels", train_channels,
                    "With --init-only and no --segments: input channels (default 9)");
  train->add_option("--seconds", train_seconds,
                    "With --init-only and no --segments: segment seconds (default 1)");

  // quantize
  Common quant_c;
  std::string quant_in, quant_out, quant_segments;
  auto* quant = app.add_subcommand("quantize", "Convert float weights to 8-bit coefficients");
  add_common(quant, quant_c);
  quant->add_option("--weights", quant_in, "Float weight file")->required();
  quant->add_option("--out", quant_out, "Quantized weight file to write")->required();
  quant->add_option("--segments", quant_segments,
                    "Segment archive for a float vs quantized degradation report");

  // stream
  Common stream_c;
  StreamArgs stream_a;
  WmvOptions stream_w;
  auto* stream = app.add_subcommand("stream", "Replay a recording through a model and WMV");
  add_common(stream, stream_c);
  stream->add_option("--recording", stream_a.recording, "Recording prefix")->required();
  stream->add_option("--weights", stream_a.weights, "Weight file (float or quantized)")->required();
  stream->add_option("--channels", stream_a.channels,
                     "Comma-separated channel indices (default: from --segments, else 0..K-1)");
  stream->add_option("--segments", stream_a.segments, "Take channel indices from this archive");
  stream->add_option("--stride", stream_a.stride, "Seconds between segment starts (default 0.5)")
      ->check(CLI::PositiveNumber);
  stream->add_option("--csv", stream_a.csv,
                     "Per-segment CSV: time_s,score_ictal,score_preictal,pred_label,event");
  stream->add_option("--events", stream_a.events, "Events CSV: kind,segment_index,time_s");
  stream->add_option("--threads", stream_a.threads, "Classification threads (default 1, 0 = all cores)");
  add_wmv_options(stream, stream_w);

  // eval
  Common eval_c;
  std::string eval_events, eval_rec;
  double eval_tol = kDetectionToleranceS;
  double eval_horizon = kPredictionHorizonS;
  auto* eval = app.add_subcommand("eval", "Score an events CSV against recording annotations");
  add_common(eval, eval_c);
  eval->add_option("--events", eval_events, "Events CSV from `stream`")->required();
  eval->add_option("--recording", eval_rec, "Recording prefix (only the meta file is read)")->required();
  eval->add_option("--tolerance", eval_tol, "Detection tolerance around onset in s (default 5)");
  eval->add_option("--horizon", eval_horizon, "Prediction horizon before onset in s (default 2400)");

  // cv
  Common cv_c;
  CvArgs cv_a;
  TrainOptions cv_t;
  WmvOptions cv_w;
  auto* cv = app.add_subcommand("cv", "Stratified k-fold (segments) or LOOCV (recording) evaluation");
  add_common(cv, cv_c);
  cv->add_option("--mode", cv_a.mode, "kfold or loocv (default kfold)")
      ->check(CLI::IsMember({"kfold", "loocv"}));
  cv->add_option("--segments", cv_a.segments, "kfold: segment archive");
  cv->add_option("--recording", cv_a.recording, "loocv: recording prefix");
  cv->add_option("--folds", cv_a.folds, "kfold: number of folds (default 10)")->check(CLI::PositiveNumber);
  cv->add_option("--threads", cv_a.threads, "Folds evaluated in parallel (default 1, 0 = all cores)");
  cv->add_option("--stride", cv_a.stride, "loocv: stream stride in s (default 0.5)")->check(CLI::PositiveNumber);
  cv->add_option("--precision", cv_a.precision, "loocv: stream model precision (default quantized)")
      ->check(CLI::IsMember({"float", "quantized"}));
  add_channel_options(cv, cv_a.channels, "loocv: use the top k ranked channels (default 9)");
  add_extract_options(cv, cv_a.extract);
  add_train_options(cv, cv_t);
  add_wmv_options(cv, cv_w);

  // cost
  Common cost_c;
  CostArgs cost_a;
  auto* cost = app.add_subcommand("cost", "MAC, parameter and memory report");
  add_common(cost, cost_c);
  cost->add_option("--family", cost_a.family, "dnn, cnn or lstm (default cnn)")
      ->check(CLI::IsMember({"dnn", "cnn", "lstm"}, CLI::ignore_case));
  cost->add_option("--weights", cost_a.weights, "Take the model from this weight file");
  cost->add_option("--fs", cost_a.fs, "Sampling rate (default 256)")->check(CLI::PositiveNumber);
  cost->add_option("--channels", cost_a.channels, "Input channels (default 5 for dnn, 9 otherwise)")->check(CLI::PositiveNumber);
  auto* cost_seconds = cost->add_option("--seconds", cost_a.seconds,
                                        "Segment seconds (default: 0.5 dnn, 1 cnn, 2 lstm)");
  cost->add_option("--coef-bits", cost_a.coef_bits, "Coefficient bits for memory (default 8)");
  cost->add_option("--act-bits", cost_a.act_bits, "Activation bits for memory (default 16)");
  cost->add_flag("--instrumented", cost_a.instrumented,
                 "Also count conv/fc multiplies during one real inference");
  cost->add_option("--bench", cost_a.bench,
                   "Time inference with this many repetitions (>= 10; output is not deterministic)");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("edgeseizure");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_c, synth_cfg, synth_out, out);
    if (rank->parsed()) return cmd_rank(rank_c, rank_rec, rank_k, out);
    if (segment->parsed()) return cmd_segment(seg_c, seg_rec, seg_ch, seg_cfg, seg_out, out);
    if (train->parsed()) {
      return cmd_train(train_c, train_t, train_segments, train_out, train_init_only, train_fs,
                       train_channels, train_seconds, out);
    }
    if (quant->parsed()) return cmd_quantize(quant_c, quant_in, quant_out, quant_segments, out);
    if (stream->parsed()) return cmd_stream(stream_c, stream_a, stream_w, out);
    if (eval->parsed()) return cmd_eval(eval_c, eval_events, eval_rec, eval_tol, eval_horizon, out);
    if (cv->parsed()) {
      const ConfigFile config = load_config(cv_c.config);
      const TrainConfig tc = resolve_train(cv_t, config, cv_c.seed);
      const Family family = parse_family(cv_t.family);
      if (cv_a.mode == "kfold") return cv_kfold(cv_c, cv_a, tc, family, out);
      return cv_loocv(cv_c, cv_a, tc, resolve_wmv(cv_w, config), family, out);
    }
    if (cost->parsed()) return cmd_cost(cost_c, cost_a, cost_seconds->count() > 0, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace edgeseizure::cli
