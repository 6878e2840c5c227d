#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hstream/context_memory.hpp"
#include "hstream/dataset_pipeline.hpp"
#include "hstream/describer.hpp"
#include "hstream/detector.hpp"
#include "hstream/metrics.hpp"
#include "hstream/scoring.hpp"
#include "hstream/simulator.hpp"

namespace hstream {

struct MetricsConfig {
  std::vector<double> tiou{0.3, 0.5, 0.7};
  std::size_t topk = 5;
  double aedt_threshold = 0.5;
  std::string embedder = "mock";  // mock | http
  std::size_t mock_dim = 256;
  HttpEmbedderConfig http;
};

struct DescribeConfig {
  std::string client = "mock";  // mock | http
  HttpDescriberConfig http;
  MemoryPolicy memory;
  // Fractions of each finished instance to describe as partial observations.
  std::vector<double> partial;
  // Frame handle prefix; handles are "<frames_dir>/<video_id>/<frame index>.jpg".
  std::string frames_dir = "frames";
};

struct PipelineConfig {
  std::string client = "mock";  // mock | http
  std::size_t window = 3;
  std::size_t k = 0;  // 0 disables canonicalisation
  // Absolute duration bounds in seconds; unset means 1% / 50% of each video.
  std::optional<DurationBounds> bounds;
  std::size_t max_attempts = 3;
  HttpLlmConfig http;
};

struct RunConfig {
  std::size_t jobs = 1;
  // e2e: train a scorer on simulated features instead of using oracle scores.
  bool train = false;
  std::size_t train_videos = 20;
  SimConfig sim;
  ScorerConfig scorer;
  DetectorConfig detector;
  MetricsConfig metrics;
  DescribeConfig describer;
  PipelineConfig pipeline;
};

// JSON conversions. Readers start from the target's current values, accept
// partial objects and throw DataError on unknown keys or wrong types.
void to_json(nlohmann::json& j, const HistogramConfig& c);
void from_json(const nlohmann::json& j, HistogramConfig& c);
void to_json(nlohmann::json& j, const ScorerConfig& c);
void from_json(const nlohmann::json& j, ScorerConfig& c);
void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);
void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);
void to_json(nlohmann::json& j, const RetryPolicy& c);
void from_json(const nlohmann::json& j, RetryPolicy& c);
void to_json(nlohmann::json& j, const MemoryPolicy& c);
void from_json(const nlohmann::json& j, MemoryPolicy& c);
void to_json(nlohmann::json& j, const HttpDescriberConfig& c);
void from_json(const nlohmann::json& j, HttpDescriberConfig& c);
void to_json(nlohmann::json& j, const HttpEmbedderConfig& c);
void from_json(const nlohmann::json& j, HttpEmbedderConfig& c);
void to_json(nlohmann::json& j, const HttpLlmConfig& c);
void from_json(const nlohmann::json& j, HttpLlmConfig& c);
void to_json(nlohmann::json& j, const MetricsConfig& c);
void from_json(const nlohmann::json& j, MetricsConfig& c);
void to_json(nlohmann::json& j, const DescribeConfig& c);
void from_json(const nlohmann::json& j, DescribeConfig& c);
void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Overlays a JSON document onto `base`; blank text leaves it unchanged.
// Throws DataError on bad input.
RunConfig merge_run_config(RunConfig base, const std::string& json_text);
std::string run_config_json(const RunConfig& c);

}  // namespace hstream
