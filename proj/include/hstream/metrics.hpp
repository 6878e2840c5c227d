#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hstream/core_model.hpp"
#include "hstream/http.hpp"

namespace hstream {

double tiou(const Interval& a, const Interval& b);

struct MatchPair {
  std::size_t gt = 0;
  std::size_t pred = 0;
  double tiou = 0.0;

  bool operator==(const MatchPair&) const = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // pairs passing the threshold
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
};

// Maximum-weight assignment on a rows x cols profit matrix (row-major).
// Returns, for each row, the assigned column or npos when unassigned.
// Exact O(n^3) shortest-augmenting-path method.
std::vector<std::size_t> max_weight_assignment(std::span<const double> profit, std::size_t rows,
                                               std::size_t cols);

struct F1Options {
  // F1 reported when both ground truth and predictions are empty.
  double empty_f1 = 1.0;
};

struct HungarianScore {
  double f1 = 0.0;
  MatchResult match;
};

HungarianScore hungarian_f1(std::span<const Interval> gt, std::span<const Interval> pred,
                            double threshold, const F1Options& options = {});

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Unit-norm vectors of a fixed dimension, one per text.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

// L2-normalised hashed bag of lowercase alphanumeric tokens.
class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(std::size_t dim = 256) : dim_(dim) {}
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
};

struct HttpEmbedderConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/embeddings";
  std::string model = "text-embedding-3-small";
  std::string api_key_env = "HSTREAM_API_KEY";
  RetryPolicy retry;
};

// OpenAI-compatible /v1/embeddings client.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig cfg);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  HttpEmbedderConfig cfg_;
  std::string api_key_;
};

double cosine(std::span<const double> a, std::span<const double> b);

// Deduplicated description corpus (first-occurrence order) with embeddings.
class CorpusIndex {
 public:
  CorpusIndex(const std::vector<std::string>& corpus, Embedder& embedder);

  std::size_t size() const { return texts_.size(); }
  const std::vector<std::string>& texts() const { return texts_; }
  std::optional<std::size_t> position(const std::string& text) const;
  // 1-based rank of corpus entry `target` by similarity to `query`; ties go to
  // the earlier corpus entry.
  std::size_t rank(std::span<const double> query, std::size_t target) const;

 private:
  std::vector<std::string> texts_;
  std::vector<std::vector<double>> vectors_;
};

// Hungarian F1 where a threshold-passing pair also needs the matched ground
// truth description to rank within the top k of the (deduplicated) corpus by
// cosine similarity to the prediction's description.
double topk_f1(std::span<const ActionInstance> gt, std::span<const ActionInstance> pred,
               double threshold, std::size_t k, const std::vector<std::string>& corpus,
               Embedder& embedder, const F1Options& options = {});
double topk_f1(std::span<const ActionInstance> gt, std::span<const ActionInstance> pred,
               double threshold, std::size_t k, const CorpusIndex& corpus, Embedder& embedder,
               const F1Options& options = {});

// Each prediction goes to its highest-tIoU ground truth (earliest on ties) and
// is kept when that tIoU reaches the threshold. A ground truth may be reused.
MatchResult greedy_match(std::span<const Interval> gt, std::span<const Interval> pred,
                         double threshold);

enum class JudgeCriterion { CI, DO, CU, TU };

std::string_view criterion_name(JudgeCriterion c);

struct JudgePayload {
  JudgeCriterion criterion = JudgeCriterion::CI;
  std::size_t pair = 0;
  std::string system;
  std::string user;
};

// One payload per (pair, criterion); gt_texts/pred_texts are indexed by the
// pair's gt/pred indices.
std::vector<JudgePayload> judge_requests(const MatchResult& matches,
                                         const std::vector<std::string>& gt_texts,
                                         const std::vector<std::string>& pred_texts,
                                         std::span<const JudgeCriterion> criteria,
                                         const std::string& question);

// Score from a `{'score': n}` reply; nullopt when absent or outside [0, 5].
std::optional<double> parse_judge(std::string_view reply);

struct JudgeSummary {
  std::optional<double> mean;
  std::size_t scored = 0;
  std::size_t missing = 0;
};

JudgeSummary summarize_judge(const std::vector<std::string>& replies);

struct TimedPrediction {
  Interval interval;
  std::optional<double> emit_time;
};

struct AedtResult {
  double mean_abs = 0.0;
  double mean_signed = 0.0;
  std::size_t count = 0;
};

// Mean |emit_time - gt end| over Hungarian true positives; nullopt when there
// are none. Throws DataError if a prediction lacks emit_time.
std::optional<AedtResult> aedt(std::span<const Interval> gt, std::span<const TimedPrediction> pred,
                               double threshold);

// Fraction of videos whose own ground-truth goal is the top-1 cosine match of
// the predicted goal among all ground-truth goals.
double goal_accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& truth,
                     Embedder& embedder);

}  // namespace hstream
