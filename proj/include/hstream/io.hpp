#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hstream/core_model.hpp"
#include "hstream/scoring.hpp"

namespace hstream {

// All readers throw DataError with the offending line on malformed input.

std::vector<AnnotationSet> parse_annotations_jsonl(const std::string& text);
std::string annotations_jsonl(const std::vector<AnnotationSet>& sets);
std::string annotation_line(const AnnotationSet& a);

// timestamp,f0,...,f{D-1}
FeatureSequence parse_features_csv(const std::string& text);
std::string features_csv(const FeatureSequence& seq);

// timestamp,bg,step,stepsub,sp0..sp{B-1},ssp0..ssp{B-1}
std::vector<FrameScores> parse_scores_csv(const std::string& text);
std::string scores_csv(const std::vector<FrameScores>& scores);

// One emitted (or predicted) instance. Goal predictions carry level 3 and the
// whole-video interval.
struct EmissionRecord {
  std::string video_id;
  ActionInstance instance;
  std::optional<double> emit_time;

  bool operator==(const EmissionRecord&) const = default;
};

std::vector<EmissionRecord> parse_emissions_jsonl(const std::string& text);
std::string emission_line(const EmissionRecord& r);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace hstream
