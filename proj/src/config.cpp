#include "hstream/config.hpp"

#include <initializer_list>
#include <string_view>

#include "hstream/errors.hpp"

namespace hstream {

namespace {

using nlohmann::json;

void require_object(const json& j, std::string_view section) {
  if (!j.is_object()) throw DataError("config section '" + std::string(section) + "' must be an object");
}

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> keys) {
  require_object(j, section);
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || item.key() == k;
    if (!known) {
      throw DataError("unknown key '" + item.key() + "' in config section '" + std::string(section) +
                      "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    it->get_to(out);
  } catch (const json::exception& e) {
    throw DataError(std::string("config key '") + key + "': " + e.what());
  }
}

void read_range(const json& j, const char* key, Range& r) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw DataError(std::string("config key '") + key + "' must be [lo, hi]");
  }
  r = {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

void read_count_range(const json& j, const char* key, CountRange& r) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_unsigned() ||
      !(*it)[1].is_number_unsigned()) {
    throw DataError(std::string("config key '") + key + "' must be [lo, hi] with counts");
  }
  r = {(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>()};
}

std::string_view drop_reference_name(DropReference r) {
  return r == DropReference::RunningMax ? "running_max" : "previous_frame";
}

std::string_view encoding_name(FrameEncoding e) { return e == FrameEncoding::Url ? "url" : "base64"; }

}  // namespace

void to_json(json& j, const HistogramConfig& c) {
  j = {{"bins", c.bins}, {"sigma", c.sigma}, {"mean_correction", c.mean_correction}};
}

void from_json(const json& j, HistogramConfig& c) {
  check_keys(j, "histogram", {"bins", "sigma", "mean_correction"});
  read(j, "bins", c.bins);
  read(j, "sigma", c.sigma);
  read(j, "mean_correction", c.mean_correction);
}

void to_json(json& j, const ScorerConfig& c) {
  j = {{"feature_dim", c.feature_dim},
       {"recurrent_layers", c.recurrent_layers},
       {"hidden_dim", c.hidden_dim},
       {"learning_rate", c.learning_rate},
       {"weight_decay", c.weight_decay},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"bptt_window", c.bptt_window},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"epsilon", c.epsilon},
       {"state_loss_weight", c.state_loss_weight},
       {"step_loss_weight", c.step_loss_weight},
       {"substep_loss_weight", c.substep_loss_weight},
       {"histogram", c.histogram}};
}

void from_json(const json& j, ScorerConfig& c) {
  check_keys(j, "scorer",
             {"feature_dim", "recurrent_layers", "hidden_dim", "learning_rate", "weight_decay",
              "batch_size", "epochs", "bptt_window", "beta1", "beta2", "epsilon",
              "state_loss_weight", "step_loss_weight", "substep_loss_weight", "histogram"});
  read(j, "feature_dim", c.feature_dim);
  read(j, "recurrent_layers", c.recurrent_layers);
  read(j, "hidden_dim", c.hidden_dim);
  read(j, "learning_rate", c.learning_rate);
  read(j, "weight_decay", c.weight_decay);
  read(j, "batch_size", c.batch_size);
  read(j, "epochs", c.epochs);
  read(j, "bptt_window", c.bptt_window);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "epsilon", c.epsilon);
  read(j, "state_loss_weight", c.state_loss_weight);
  read(j, "step_loss_weight", c.step_loss_weight);
  read(j, "substep_loss_weight", c.substep_loss_weight);
  read(j, "histogram", c.histogram);
}

void to_json(json& j, const DetectorConfig& c) {
  j = {{"start_threshold", c.start_threshold},
       {"drop_delta", c.drop_delta},
       {"min_progress_for_drop", c.min_progress_for_drop},
       {"close_incomplete_at_eos", c.close_incomplete_at_eos},
       {"drop_reference", drop_reference_name(c.drop_reference)}};
}

void from_json(const json& j, DetectorConfig& c) {
  check_keys(j, "detector",
             {"start_threshold", "drop_delta", "min_progress_for_drop", "close_incomplete_at_eos",
              "drop_reference"});
  read(j, "start_threshold", c.start_threshold);
  read(j, "drop_delta", c.drop_delta);
  read(j, "min_progress_for_drop", c.min_progress_for_drop);
  read(j, "close_incomplete_at_eos", c.close_incomplete_at_eos);
  std::string ref(drop_reference_name(c.drop_reference));
  read(j, "drop_reference", ref);
  if (ref == "previous_frame") {
    c.drop_reference = DropReference::PreviousFrame;
  } else if (ref == "running_max") {
    c.drop_reference = DropReference::RunningMax;
  } else {
    throw DataError("drop_reference must be previous_frame or running_max");
  }
}

void to_json(json& j, const SimConfig& c) {
  j = {{"seed", c.seed},
       {"videos", c.videos},
       {"duration", {c.duration.lo, c.duration.hi}},
       {"steps_per_video", {c.steps_per_video.lo, c.steps_per_video.hi}},
       {"substeps_per_step", {c.substeps_per_step.lo, c.substeps_per_step.hi}},
       {"zero_gap_prob", c.zero_gap_prob},
       {"gap", {c.gap.lo, c.gap.hi}},
       {"margin", {c.margin.lo, c.margin.hi}},
       {"min_substep_seconds", c.min_substep_seconds},
       {"noise_sigma", c.noise_sigma},
       {"fps", c.fps},
       {"feature_dim", c.feature_dim},
       {"histogram", c.histogram}};
}

void from_json(const json& j, SimConfig& c) {
  check_keys(j, "sim",
             {"seed", "videos", "duration", "steps_per_video", "substeps_per_step", "zero_gap_prob",
              "gap", "margin", "min_substep_seconds", "noise_sigma", "fps", "feature_dim",
              "histogram"});
  read(j, "seed", c.seed);
  read(j, "videos", c.videos);
  read_range(j, "duration", c.duration);
  read_count_range(j, "steps_per_video", c.steps_per_video);
  read_count_range(j, "substeps_per_step", c.substeps_per_step);
  read(j, "zero_gap_prob", c.zero_gap_prob);
  read_range(j, "gap", c.gap);
  read_range(j, "margin", c.margin);
  read(j, "min_substep_seconds", c.min_substep_seconds);
  read(j, "noise_sigma", c.noise_sigma);
  read(j, "fps", c.fps);
  read(j, "feature_dim", c.feature_dim);
  read(j, "histogram", c.histogram);
}

void to_json(json& j, const RetryPolicy& c) {
  j = {{"max_retries", c.max_retries},
       {"initial_backoff_seconds", c.initial_backoff_seconds},
       {"timeout_seconds", c.timeout_seconds}};
}

void from_json(const json& j, RetryPolicy& c) {
  check_keys(j, "retry", {"max_retries", "initial_backoff_seconds", "timeout_seconds"});
  read(j, "max_retries", c.max_retries);
  read(j, "initial_backoff_seconds", c.initial_backoff_seconds);
  read(j, "timeout_seconds", c.timeout_seconds);
}

void to_json(json& j, const MemoryPolicy& c) {
  j = {{"substep_spacing", c.substep_spacing},
       {"step_spacing", c.step_spacing},
       {"step_history", c.step_history}};
}

void from_json(const json& j, MemoryPolicy& c) {
  check_keys(j, "memory", {"substep_spacing", "step_spacing", "step_history"});
  read(j, "substep_spacing", c.substep_spacing);
  read(j, "step_spacing", c.step_spacing);
  read(j, "step_history", c.step_history);
}

void to_json(json& j, const HttpDescriberConfig& c) {
  j = {{"endpoint", c.endpoint},
       {"model", c.model},
       {"api_key_env", c.api_key_env},
       {"frame_encoding", encoding_name(c.frame_encoding)},
       {"image_mime", c.image_mime},
       {"in_flight_cap", c.in_flight_cap},
       {"retry", c.retry}};
}

void from_json(const json& j, HttpDescriberConfig& c) {
  check_keys(j, "describer.http",
             {"endpoint", "model", "api_key_env", "frame_encoding", "image_mime", "in_flight_cap",
              "retry"});
  read(j, "endpoint", c.endpoint);
  read(j, "model", c.model);
  read(j, "api_key_env", c.api_key_env);
  std::string enc(encoding_name(c.frame_encoding));
  read(j, "frame_encoding", enc);
  if (enc == "base64") {
    c.frame_encoding = FrameEncoding::Base64;
  } else if (enc == "url") {
    c.frame_encoding = FrameEncoding::Url;
  } else {
    throw DataError("frame_encoding must be base64 or url");
  }
  read(j, "image_mime", c.image_mime);
  read(j, "in_flight_cap", c.in_flight_cap);
  read(j, "retry", c.retry);
}

void to_json(json& j, const HttpEmbedderConfig& c) {
  j = {{"endpoint", c.endpoint}, {"model", c.model}, {"api_key_env", c.api_key_env}, {"retry", c.retry}};
}

void from_json(const json& j, HttpEmbedderConfig& c) {
  check_keys(j, "metrics.http", {"endpoint", "model", "api_key_env", "retry"});
  read(j, "endpoint", c.endpoint);
  read(j, "model", c.model);
  read(j, "api_key_env", c.api_key_env);
  read(j, "retry", c.retry);
}

void to_json(json& j, const HttpLlmConfig& c) {
  j = {{"endpoint", c.endpoint}, {"model", c.model}, {"api_key_env", c.api_key_env}, {"retry", c.retry}};
}

void from_json(const json& j, HttpLlmConfig& c) {
  check_keys(j, "pipeline.http", {"endpoint", "model", "api_key_env", "retry"});
  read(j, "endpoint", c.endpoint);
  read(j, "model", c.model);
  read(j, "api_key_env", c.api_key_env);
  read(j, "retry", c.retry);
}

void to_json(json& j, const MetricsConfig& c) {
  j = {{"tiou", c.tiou},
       {"topk", c.topk},
       {"aedt_threshold", c.aedt_threshold},
       {"embedder", c.embedder},
       {"mock_dim", c.mock_dim},
       {"http", c.http}};
}

void from_json(const json& j, MetricsConfig& c) {
  check_keys(j, "metrics", {"tiou", "topk", "aedt_threshold", "embedder", "mock_dim", "http"});
  read(j, "tiou", c.tiou);
  read(j, "topk", c.topk);
  read(j, "aedt_threshold", c.aedt_threshold);
  read(j, "embedder", c.embedder);
  read(j, "mock_dim", c.mock_dim);
  read(j, "http", c.http);
}

void to_json(json& j, const DescribeConfig& c) {
  j = {{"client", c.client},
       {"http", c.http},
       {"memory", c.memory},
       {"partial", c.partial},
       {"frames_dir", c.frames_dir}};
}

void from_json(const json& j, DescribeConfig& c) {
  check_keys(j, "describer", {"client", "http", "memory", "partial", "frames_dir"});
  read(j, "client", c.client);
  read(j, "http", c.http);
  read(j, "memory", c.memory);
  read(j, "partial", c.partial);
  read(j, "frames_dir", c.frames_dir);
}

void to_json(json& j, const PipelineConfig& c) {
  j = {{"client", c.client},
       {"window", c.window},
       {"k", c.k},
       {"bounds", c.bounds ? json{c.bounds->min_seconds, c.bounds->max_seconds} : json(nullptr)},
       {"max_attempts", c.max_attempts},
       {"http", c.http}};
}

void from_json(const json& j, PipelineConfig& c) {
  check_keys(j, "pipeline", {"client", "window", "k", "bounds", "max_attempts", "http"});
  read(j, "client", c.client);
  read(j, "window", c.window);
  read(j, "k", c.k);
  if (const auto it = j.find("bounds"); it != j.end()) {
    if (it->is_null()) {
      c.bounds.reset();
    } else {
      Range r;
      read_range(j, "bounds", r);
      c.bounds = DurationBounds{r.lo, r.hi};
    }
  }
  read(j, "max_attempts", c.max_attempts);
  read(j, "http", c.http);
}

void to_json(json& j, const RunConfig& c) {
  j = {{"jobs", c.jobs},
       {"train", c.train},
       {"train_videos", c.train_videos},
       {"sim", c.sim},
       {"scorer", c.scorer},
       {"detector", c.detector},
       {"metrics", c.metrics},
       {"describer", c.describer},
       {"pipeline", c.pipeline}};
}

void from_json(const json& j, RunConfig& c) {
  check_keys(j, "root",
             {"jobs", "train", "train_videos", "sim", "scorer", "detector", "metrics", "describer",
              "pipeline"});
  read(j, "jobs", c.jobs);
  read(j, "train", c.train);
  read(j, "train_videos", c.train_videos);
  read(j, "sim", c.sim);
  read(j, "scorer", c.scorer);
  read(j, "detector", c.detector);
  read(j, "metrics", c.metrics);
  read(j, "describer", c.describer);
  read(j, "pipeline", c.pipeline);
}

RunConfig merge_run_config(RunConfig base, const std::string& json_text) {
  if (json_text.find_first_not_of(" \t\r\n") == std::string::npos) return base;
  const auto j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw DataError("config is not valid JSON");
  from_json(j, base);
  return base;
}

std::string run_config_json(const RunConfig& c) { return json(c).dump(2); }

}  // namespace hstream
