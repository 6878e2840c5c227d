#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hstream/core_model.hpp"
#include "hstream/http.hpp"
#include "hstream/metrics.hpp"

namespace hstream {

// Inclusive range of substep indices.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;

  bool operator==(const IndexRange&) const = default;
};

struct GroupingProposal {
  std::vector<IndexRange> groups;
  std::vector<std::string> step_descriptions;  // one per group
  std::string goal_description;

  bool operator==(const GroupingProposal&) const = default;
};

enum class BoundKind { TooShort, TooLong };

struct AbnormalGroup {
  std::size_t group = 0;
  double duration = 0.0;
  BoundKind bound = BoundKind::TooShort;

  bool operator==(const AbnormalGroup&) const = default;
};

struct ConsistencyReport {
  std::vector<std::size_t> missing;
  std::vector<AbnormalGroup> abnormal;

  bool empty() const { return missing.empty() && abnormal.empty(); }
};

struct DurationBounds {
  double min_seconds = 0.0;
  double max_seconds = 0.0;
};

// 1% and 50% of the video duration.
DurationBounds default_bounds(double duration);

enum class ChatTask { Grouping, Caption };

struct ChatRequest {
  ChatTask task = ChatTask::Grouping;
  std::string prompt;
  // Grouping: substep descriptions in order. Caption: cluster members, nearest
  // to the centroid first.
  std::vector<std::string> items;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

// Groups consecutive substeps in fixed windows and captions a cluster with its
// first item.
class MockLlmClient final : public LlmClient {
 public:
  explicit MockLlmClient(std::size_t window = 3);
  std::string complete(const ChatRequest& request) override;

 private:
  std::size_t window_;
};

struct HttpLlmConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "HSTREAM_API_KEY";
  RetryPolicy retry;
};

// Text-only chat-completions client; retries transport errors and 5xx replies.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmConfig cfg);
  std::string complete(const ChatRequest& request) override;

 private:
  HttpLlmConfig cfg_;
  std::string api_key_;
};

std::string grouping_prompt(const std::vector<ActionInstance>& substeps);

// Parses a reply of the form
// {"steps":[{"substep_indices":[...],"description":"..."}],"goal":"..."}.
// Throws ParseError on malformed replies or out-of-range indices.
GroupingProposal parse_grouping(const std::string& reply, std::size_t substep_count);

// Asks the client for a grouping, re-asking up to `max_attempts` times while
// the reply is unparseable. Throws DataError on empty or unsorted input and
// ParseError (with the last raw reply) once attempts run out.
GroupingProposal propose_grouping(const std::vector<ActionInstance>& substeps, LlmClient& client,
                                  std::size_t max_attempts = 3);

// Clamps and sorts the groups, splits overlaps at the middle substep, and
// absorbs uncovered substeps into the temporally nearest adjacent group.
GroupingProposal postprocess(const GroupingProposal& proposal,
                             const std::vector<ActionInstance>& substeps);

// [first substep start, last substep end] of a group.
Interval group_interval(const IndexRange& group, const std::vector<ActionInstance>& substeps);

ConsistencyReport check_consistency(const GroupingProposal& proposal,
                                    const std::vector<ActionInstance>& substeps,
                                    const DurationBounds& bounds);

// Hierarchical annotations: the substeps, one step per group and the goal.
AnnotationSet to_annotations(const AnnotationSet& source, const GroupingProposal& proposal);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;
  std::vector<double> objective_trace;  // after each assignment pass
};

// k-means++ seeding then Lloyd iterations, at most `max_iterations` or until
// the relative objective improvement drops below `tolerance`. Throws
// DomainError unless 1 <= k <= points.size().
KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                    std::uint64_t seed, std::size_t max_iterations = 100,
                    double tolerance = 1e-6);

struct Canonicalization {
  std::vector<std::size_t> assignment;  // per input description
  std::vector<std::string> captions;    // per cluster
  std::vector<double> objective_trace;
};

// Clusters the distinct descriptions and captions each cluster through the
// client. Throws DomainError when k exceeds the number of distinct descriptions.
Canonicalization kmeans_canonicalize(const std::vector<std::string>& descriptions, std::size_t k,
                                     Embedder& embedder, LlmClient& client, std::uint64_t seed);

}  // namespace hstream
