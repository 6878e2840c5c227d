#include "hstream/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <regex>

#include <json.hpp>

#include "hstream/errors.hpp"
#include "hstream/prompts.hpp"

namespace hstream {

double tiou(const Interval& a, const Interval& b) {
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  if (!(uni > 0.0)) return 0.0;
  return inter / uni;
}

std::vector<std::size_t> max_weight_assignment(std::span<const double> profit, std::size_t rows,
                                               std::size_t cols) {
  constexpr auto npos = static_cast<std::size_t>(-1);
  if (profit.size() != rows * cols) throw DomainError("profit matrix has the wrong size");
  std::vector<std::size_t> result(rows, npos);
  if (rows == 0 || cols == 0) return result;

  // The potential method below needs n <= m; solve the transpose otherwise.
  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;
  const std::size_t m = transposed ? rows : cols;
  auto cost = [&](std::size_t i, std::size_t j) {
    return transposed ? -profit[j * cols + i] : -profit[i * cols + j];
  };

  // 1-based potentials; way/match arrays index columns.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<std::size_t> match(m + 1, 0);
  std::vector<std::size_t> way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= m; ++j) {
    if (match[j] == 0) continue;
    const std::size_t i = match[j] - 1;
    if (transposed) {
      result[j - 1] = i;
    } else {
      result[i] = j - 1;
    }
  }
  return result;
}

namespace {

double f1_from(std::size_t tp, std::size_t n_gt, std::size_t n_pred, const F1Options& options) {
  if (n_gt == 0 && n_pred == 0) return options.empty_f1;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(n_gt + n_pred);
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("tIoU threshold must lie in (0, 1]");
}

MatchResult hungarian_match(std::span<const Interval> gt, std::span<const Interval> pred,
                            double threshold) {
  std::vector<double> profit(gt.size() * pred.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) profit[i * pred.size() + j] = tiou(gt[i], pred[j]);
  }
  const auto assign = max_weight_assignment(profit, gt.size(), pred.size());
  MatchResult r;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (assign[i] == static_cast<std::size_t>(-1)) continue;
    const double t = profit[i * pred.size() + assign[i]];
    if (t >= threshold) r.pairs.push_back({i, assign[i], t});
  }
  r.tp = r.pairs.size();
  r.fn = gt.size() - r.tp;
  r.fp = pred.size() - r.tp;
  return r;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0) {
    for (auto& x : v) x /= n;
  }
}

}  // namespace

HungarianScore hungarian_f1(std::span<const Interval> gt, std::span<const Interval> pred,
                            double threshold, const F1Options& options) {
  check_threshold(threshold);
  HungarianScore s;
  s.match = hungarian_match(gt, pred, threshold);
  s.f1 = f1_from(s.match.tp, gt.size(), pred.size(), options);
  return s;
}

std::vector<std::vector<double>> MockEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> v(dim_, 0.0);
    auto tokens = tokenize(text);
    if (tokens.empty()) tokens.emplace_back();
    for (const auto& tok : tokens) v[fnv1a(tok) % dim_] += 1.0;
    normalize(v);
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig cfg) : cfg_(std::move(cfg)) {
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  const std::string body = nlohmann::json{{"model", cfg_.model}, {"input", texts}}.dump();
  const auto headers = auth_headers(api_key_);
  std::vector<std::vector<double>> out;
  std::string last_error;
  const auto outcome = run_with_retries(cfg_.retry, [&] {
    HttpResponse res;
    try {
      res = http_post_json(cfg_.endpoint, body, headers, cfg_.retry.timeout_seconds);
    } catch (const TransportError& e) {
      last_error = e.what();
      return false;
    }
    if (res.status >= 500) {
      last_error = "server returned HTTP " + std::to_string(res.status);
      return false;
    }
    if (res.status < 200 || res.status >= 300) {
      throw TransportError("embeddings endpoint returned HTTP " + std::to_string(res.status));
    }
    const auto j = nlohmann::json::parse(res.body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() ||
        j["data"].size() != texts.size()) {
      throw ParseError("embeddings reply does not hold one vector per input", res.body);
    }
    out.assign(texts.size(), {});
    for (std::size_t k = 0; k < j["data"].size(); ++k) {
      const auto& item = j["data"][k];
      const std::size_t idx = item.value("index", k);
      if (idx >= texts.size()) throw ParseError("embedding index out of range", res.body);
      out[idx] = item.at("embedding").get<std::vector<double>>();
      normalize(out[idx]);
    }
    return true;
  });
  if (!outcome.succeeded) throw TransportError("embedding retries exhausted: " + last_error);
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("embedding dimensions differ");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

CorpusIndex::CorpusIndex(const std::vector<std::string>& corpus, Embedder& embedder) {
  if (corpus.empty()) throw DataError("description corpus is empty");
  for (const auto& t : corpus) {
    if (std::find(texts_.begin(), texts_.end(), t) == texts_.end()) texts_.push_back(t);
  }
  vectors_ = embedder.embed(texts_);
}

std::optional<std::size_t> CorpusIndex::position(const std::string& text) const {
  const auto it = std::find(texts_.begin(), texts_.end(), text);
  if (it == texts_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - texts_.begin());
}

std::size_t CorpusIndex::rank(std::span<const double> query, std::size_t target) const {
  const double s_target = cosine(query, vectors_.at(target));
  std::size_t rank = 1;
  for (std::size_t j = 0; j < vectors_.size(); ++j) {
    if (j == target) continue;
    const double s = cosine(query, vectors_[j]);
    if (s > s_target || (s == s_target && j < target)) ++rank;
  }
  return rank;
}

double topk_f1(std::span<const ActionInstance> gt, std::span<const ActionInstance> pred,
               double threshold, std::size_t k, const std::vector<std::string>& corpus,
               Embedder& embedder, const F1Options& options) {
  const CorpusIndex index(corpus, embedder);
  return topk_f1(gt, pred, threshold, k, index, embedder, options);
}

double topk_f1(std::span<const ActionInstance> gt, std::span<const ActionInstance> pred,
               double threshold, std::size_t k, const CorpusIndex& corpus, Embedder& embedder,
               const F1Options& options) {
  check_threshold(threshold);
  if (k == 0) throw DomainError("k must be at least 1");
  std::vector<Interval> g;
  std::vector<Interval> p;
  for (const auto& x : gt) g.push_back(x.interval);
  for (const auto& x : pred) p.push_back(x.interval);
  const auto match = hungarian_match(g, p, threshold);

  std::vector<std::string> texts;
  for (const auto& pair : match.pairs) texts.push_back(pred[pair.pred].description);
  const auto vectors = embedder.embed(texts);

  std::size_t tp = 0;
  for (std::size_t n = 0; n < match.pairs.size(); ++n) {
    const auto& gt_text = gt[match.pairs[n].gt].description;
    const auto pos = corpus.position(gt_text);
    if (!pos) throw DataError("ground-truth description missing from corpus: " + gt_text);
    if (corpus.rank(vectors[n], *pos) <= k) ++tp;
  }
  return f1_from(tp, gt.size(), pred.size(), options);
}

MatchResult greedy_match(std::span<const Interval> gt, std::span<const Interval> pred,
                         double threshold) {
  check_threshold(threshold);
  MatchResult r;
  std::vector<bool> gt_hit(gt.size(), false);
  for (std::size_t j = 0; j < pred.size(); ++j) {
    std::optional<std::size_t> best;
    double best_t = -1.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const double t = tiou(gt[i], pred[j]);
      if (t > best_t) {
        best_t = t;
        best = i;
      }
    }
    if (best && best_t >= threshold) {
      r.pairs.push_back({*best, j, best_t});
      gt_hit[*best] = true;
    }
  }
  r.tp = r.pairs.size();
  r.fp = pred.size() - r.tp;
  r.fn = static_cast<std::size_t>(std::count(gt_hit.begin(), gt_hit.end(), false));
  return r;
}

std::string_view criterion_name(JudgeCriterion c) {
  switch (c) {
    case JudgeCriterion::CI:
      return "CI";
    case JudgeCriterion::DO:
      return "DO";
    case JudgeCriterion::CU:
      return "CU";
    case JudgeCriterion::TU:
      return "TU";
  }
  return "";
}

namespace {

std::pair<std::string_view, std::string_view> judge_template(JudgeCriterion c) {
  switch (c) {
    case JudgeCriterion::CI:
      return {prompts::kJudgeCISystem, prompts::kJudgeCIUser};
    case JudgeCriterion::DO:
      return {prompts::kJudgeDOSystem, prompts::kJudgeDOUser};
    case JudgeCriterion::CU:
      return {prompts::kJudgeCUSystem, prompts::kJudgeCUUser};
    case JudgeCriterion::TU:
      return {prompts::kJudgeTUSystem, prompts::kJudgeTUUser};
  }
  return {};
}

void substitute(std::string& s, std::string_view key, const std::string& value) {
  const auto pos = s.find(key);
  if (pos != std::string::npos) s.replace(pos, key.size(), value);
}

}  // namespace

std::vector<JudgePayload> judge_requests(const MatchResult& matches,
                                         const std::vector<std::string>& gt_texts,
                                         const std::vector<std::string>& pred_texts,
                                         std::span<const JudgeCriterion> criteria,
                                         const std::string& question) {
  std::vector<JudgePayload> out;
  for (std::size_t n = 0; n < matches.pairs.size(); ++n) {
    const auto& pair = matches.pairs[n];
    if (pair.gt >= gt_texts.size() || pair.pred >= pred_texts.size()) {
      throw DataError("match pair index outside the supplied texts");
    }
    for (auto c : criteria) {
      const auto [system, user] = judge_template(c);
      JudgePayload p{c, n, std::string(system), std::string(user)};
      substitute(p.user, "{question}", question);
      substitute(p.user, "{answer}", gt_texts[pair.gt]);
      substitute(p.user, "{pred}", pred_texts[pair.pred]);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::optional<double> parse_judge(std::string_view reply) {
  static const std::regex pattern(R"(score['"]*\s*:\s*([-+]?[0-9]+(?:\.[0-9]+)?))",
                                  std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(reply.begin(), reply.end(), m, pattern)) return std::nullopt;
  const double v = std::strtod(m[1].str().c_str(), nullptr);
  if (!(v >= 0.0 && v <= 5.0)) return std::nullopt;
  return v;
}

JudgeSummary summarize_judge(const std::vector<std::string>& replies) {
  JudgeSummary s;
  double total = 0.0;
  for (const auto& r : replies) {
    if (const auto v = parse_judge(r)) {
      total += *v;
      ++s.scored;
    } else {
      ++s.missing;
    }
  }
  if (s.scored > 0) s.mean = total / static_cast<double>(s.scored);
  return s;
}

std::optional<AedtResult> aedt(std::span<const Interval> gt, std::span<const TimedPrediction> pred,
                               double threshold) {
  check_threshold(threshold);
  std::vector<Interval> p;
  for (const auto& x : pred) {
    if (!x.emit_time) throw DataError("prediction lacks emit_time");
    p.push_back(x.interval);
  }
  const auto match = hungarian_match(gt, p, threshold);
  if (match.pairs.empty()) return std::nullopt;
  AedtResult r;
  for (const auto& pair : match.pairs) {
    const double d = *pred[pair.pred].emit_time - gt[pair.gt].end;
    r.mean_abs += std::abs(d);
    r.mean_signed += d;
  }
  r.count = match.pairs.size();
  r.mean_abs /= static_cast<double>(r.count);
  r.mean_signed /= static_cast<double>(r.count);
  return r;
}

double goal_accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& truth,
                     Embedder& embedder) {
  if (truth.empty()) throw DataError("goal corpus is empty");
  if (predicted.size() != truth.size()) throw DataError("one predicted goal per video is required");
  const auto corpus = embedder.embed(truth);
  const auto queries = embedder.embed(predicted);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    std::size_t best = 0;
    double best_s = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      const double s = cosine(queries[i], corpus[j]);
      if (s > best_s) {
        best_s = s;
        best = j;
      }
    }
    if (truth[best] == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

}  // namespace hstream
