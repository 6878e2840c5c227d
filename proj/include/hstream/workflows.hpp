#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hstream/config.hpp"
#include "hstream/io.hpp"
#include "hstream/session.hpp"

namespace hstream {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception (by
// index) is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

std::unique_ptr<Describer> make_describer(const DescribeConfig& cfg);
std::unique_ptr<Embedder> make_embedder(const MetricsConfig& cfg);
std::unique_ptr<LlmClient> make_llm_client(const PipelineConfig& cfg);

// Seed of the oracle score stream for the video at `index`.
std::uint64_t score_seed(std::uint64_t sim_seed, std::size_t index);
std::uint64_t feature_seed(std::uint64_t sim_seed, std::size_t index);

// Writes annotations.jsonl, scores/<video_id>.csv and features/<video_id>.csv.
void simulate_workflow(const RunConfig& cfg, const std::string& out_dir);

// Trains on annotations plus features/<video_id>.csv files; writes the model
// and returns a JSON report with the per-epoch loss.
std::string train_workflow(const RunConfig& cfg, const std::string& annotations_path,
                           const std::string& features_dir, const std::string& model_out);

struct StreamSource {
  std::string scores_path;    // score CSV, or
  std::string model_path;     // model JSON plus
  std::string features_path;  // feature CSV
  std::string video_id;
};

std::vector<FrameScores> load_stream(const StreamSource& source);

// Emissions JSONL for one stream.
void detect_workflow(const RunConfig& cfg, const StreamSource& source, const std::string& out_path);

// Described emissions JSONL for one stream, ending with the goal line.
void describe_workflow(const RunConfig& cfg, const StreamSource& source,
                       const std::string& out_path);

std::vector<EmissionRecord> session_records(const std::string& video_id, const SessionResult& r,
                                            double duration);

// Predictions may be emission records or annotation lines. Returns a JSON
// report, or a text table when `table` is set.
std::string evaluate_records(const RunConfig& cfg, const std::vector<AnnotationSet>& truth,
                             const std::vector<EmissionRecord>& predictions, bool table);
std::string evaluate_workflow(const RunConfig& cfg, const std::string& annotations_path,
                              const std::string& predictions_path, bool table);
std::vector<EmissionRecord> parse_predictions(const std::string& text);

// Substep-only annotations in, hierarchical annotations out. Returns a JSON
// report with the consistency findings.
std::string pipeline_workflow(const RunConfig& cfg, const std::string& input_path,
                              const std::string& output_path);

// simulate -> (train) -> detect -> describe -> evaluate; returns the report.
std::string e2e_workflow(const RunConfig& cfg, const std::string& out_dir);

// effective_config.json in `dir`.
void write_effective_config(const RunConfig& cfg, const std::string& dir);

}  // namespace hstream
