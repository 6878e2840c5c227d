#include "hstream/dataset_pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hstream/describer.hpp"
#include "hstream/errors.hpp"
#include "hstream/format.hpp"
#include "hstream/rng.hpp"

namespace hstream {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& items, std::size_t first, std::size_t last,
                 std::string_view sep) {
  std::string out;
  for (std::size_t i = first; i <= last; ++i) {
    if (i > first) out += sep;
    out += items[i];
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

DurationBounds default_bounds(double duration) { return {0.01 * duration, 0.5 * duration}; }

MockLlmClient::MockLlmClient(std::size_t window) : window_(window == 0 ? 1 : window) {}

std::string MockLlmClient::complete(const ChatRequest& request) {
  if (request.task == ChatTask::Caption) return request.items.empty() ? "" : request.items.front();

  json steps = json::array();
  const std::size_t n = request.items.size();
  for (std::size_t first = 0; first < n; first += window_) {
    const std::size_t last = std::min(first + window_, n) - 1;
    json indices = json::array();
    for (std::size_t i = first; i <= last; ++i) indices.push_back(i);
    steps.push_back({{"substep_indices", indices},
                     {"description", join(request.items, first, last, " then ")}});
  }
  const std::string goal = n == 0 ? "" : "activity with " + request.items.front();
  return json{{"steps", steps}, {"goal", goal}}.dump();
}

HttpLlmClient::HttpLlmClient(HttpLlmConfig cfg) : cfg_(std::move(cfg)) {
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpLlmClient::complete(const ChatRequest& request) {
  const json body{{"model", cfg_.model},
                  {"temperature", 0},
                  {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  const auto payload = body.dump();
  const auto headers = auth_headers(api_key_);

  HttpResponse res;
  std::string last_error;
  const auto outcome = run_with_retries(cfg_.retry, [&] {
    try {
      res = http_post_json(cfg_.endpoint, payload, headers, cfg_.retry.timeout_seconds);
    } catch (const TransportError& e) {
      last_error = e.what();
      return false;
    }
    if (res.status >= 500) {
      last_error = "server returned HTTP " + std::to_string(res.status);
      return false;
    }
    if (res.status < 200 || res.status >= 300) {
      throw TransportError("chat endpoint returned HTTP " + std::to_string(res.status) + ": " +
                           res.body);
    }
    return true;
  });
  if (!outcome.succeeded) throw TransportError("chat retries exhausted: " + last_error);
  return chat_reply_text(res.body);
}

std::string grouping_prompt(const std::vector<ActionInstance>& substeps) {
  std::ostringstream out;
  out << "The following substeps were performed in this order in one video. Group them into "
         "higher-level steps, where each step is a run of consecutive substeps, and name the "
         "overall goal of the video. Reply with JSON only, in the form "
         "{\"steps\":[{\"substep_indices\":[0,1],\"description\":\"...\"}],\"goal\":\"...\"}.\n"
         "Substeps:\n";
  for (std::size_t i = 0; i < substeps.size(); ++i) {
    const auto& s = substeps[i];
    out << i << ". [" << format_number(s.interval.start) << "s - " << format_number(s.interval.end)
        << "s] " << s.description << "\n";
  }
  return out.str();
}

namespace {

std::string caption_prompt(const std::vector<std::string>& members) {
  std::string out =
      "These step descriptions belong to one group. Write a single short caption that names the "
      "step they all describe. Reply with the caption only.\n";
  for (const auto& m : members) out += "- " + m + "\n";
  return out;
}

}  // namespace

GroupingProposal parse_grouping(const std::string& reply, std::size_t substep_count) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw ParseError("grouping reply contains no JSON object", reply);
  }
  const auto j = json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("grouping reply is not valid JSON", reply);
  if (!j.contains("steps") || !j["steps"].is_array() || j["steps"].empty()) {
    throw ParseError("grouping reply has no steps", reply);
  }

  GroupingProposal p;
  for (const auto& step : j["steps"]) {
    if (!step.is_object() || !step.contains("substep_indices") ||
        !step["substep_indices"].is_array() || step["substep_indices"].empty()) {
      throw ParseError("grouping step lacks substep_indices", reply);
    }
    std::size_t lo = std::numeric_limits<std::size_t>::max();
    std::size_t hi = 0;
    for (const auto& idx : step["substep_indices"]) {
      if (!idx.is_number_integer() || idx.get<long long>() < 0 ||
          static_cast<std::size_t>(idx.get<long long>()) >= substep_count) {
        throw ParseError("grouping reply has an invalid substep index", reply);
      }
      const auto v = static_cast<std::size_t>(idx.get<long long>());
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    p.groups.push_back({lo, hi});
    const auto desc = step.find("description");
    p.step_descriptions.push_back(desc != step.end() && desc->is_string() ? desc->get<std::string>()
                                                                        : std::string{});
  }
  const auto goal = j.find("goal");
  if (goal != j.end() && goal->is_string()) p.goal_description = goal->get<std::string>();
  return p;
}

GroupingProposal propose_grouping(const std::vector<ActionInstance>& substeps, LlmClient& client,
                                  std::size_t max_attempts) {
  if (substeps.empty()) throw DataError("grouping needs at least one substep");
  for (std::size_t i = 1; i < substeps.size(); ++i) {
    if (substeps[i].interval.start < substeps[i - 1].interval.start) {
      throw DataError("substeps must be sorted by start time");
    }
  }
  ChatRequest request{ChatTask::Grouping, grouping_prompt(substeps), {}};
  for (const auto& s : substeps) request.items.push_back(s.description);

  std::string last_raw;
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(max_attempts, 1); ++attempt) {
    try {
      last_raw = client.complete(request);
      return parse_grouping(last_raw, substeps.size());
    } catch (const ParseError& e) {
      last_raw = e.raw();
    }
  }
  throw ParseError("no parseable grouping after retries", last_raw);
}

Interval group_interval(const IndexRange& group, const std::vector<ActionInstance>& substeps) {
  return {substeps.at(group.first).interval.start, substeps.at(group.last).interval.end};
}

GroupingProposal postprocess(const GroupingProposal& proposal,
                             const std::vector<ActionInstance>& substeps) {
  const std::size_t n = substeps.size();
  GroupingProposal out;
  out.goal_description = proposal.goal_description;
  if (n == 0) return out;

  struct Group {
    IndexRange range;
    std::string description;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < proposal.groups.size(); ++i) {
    auto r = proposal.groups[i];
    if (r.first > r.last) std::swap(r.first, r.last);
    if (r.first >= n) continue;
    r.last = std::min(r.last, n - 1);
    groups.push_back({r, i < proposal.step_descriptions.size() ? proposal.step_descriptions[i] : ""});
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    return a.range.first != b.range.first ? a.range.first < b.range.first
                                          : a.range.last < b.range.last;
  });

  // Overlaps: the shared run is split at its middle substep.
  std::vector<Group> disjoint;
  for (auto g : groups) {
    if (!disjoint.empty() && g.range.first <= disjoint.back().range.last) {
      auto& prev = disjoint.back();
      // prev may already be trimmed; whatever lies before its start belongs
      // to earlier groups.
      if (g.range.last < prev.range.first) continue;
      const std::size_t lo = std::max(g.range.first, prev.range.first);
      const std::size_t mid = (lo + std::min(prev.range.last, g.range.last)) / 2;
      prev.range.last = mid;
      g.range.first = mid + 1;
      if (g.range.first > g.range.last) continue;
    }
    disjoint.push_back(std::move(g));
  }

  if (disjoint.empty()) {
    std::vector<std::string> all;
    for (const auto& s : substeps) all.push_back(s.description);
    disjoint.push_back({{0, n - 1}, join(all, 0, n - 1, " then ")});
  }

  // Uncovered runs between groups: each substep joins whichever neighbour is
  // closer in time (the earlier one on ties).
  std::vector<Group> covered;
  std::size_t next_free = 0;
  for (std::size_t gi = 0; gi < disjoint.size(); ++gi) {
    auto g = disjoint[gi];
    if (g.range.first > next_free) {
      const std::size_t a = next_free;
      const std::size_t b = g.range.first - 1;
      std::size_t first_for_next = a;
      if (!covered.empty()) {
        const double prev_end = substeps[a - 1].interval.end;
        const double next_start = substeps[b + 1].interval.start;
        while (first_for_next <= b &&
               substeps[first_for_next].interval.start - prev_end <=
                   next_start - substeps[first_for_next].interval.end) {
          ++first_for_next;
        }
        if (first_for_next > a) covered.back().range.last = first_for_next - 1;
      }
      g.range.first = first_for_next;
    }
    next_free = g.range.last + 1;
    covered.push_back(std::move(g));
  }
  if (next_free < n) covered.back().range.last = n - 1;

  for (auto& g : covered) {
    out.groups.push_back(g.range);
    out.step_descriptions.push_back(std::move(g.description));
  }
  return out;
}

ConsistencyReport check_consistency(const GroupingProposal& proposal,
                                    const std::vector<ActionInstance>& substeps,
                                    const DurationBounds& bounds) {
  const std::size_t n = substeps.size();
  ConsistencyReport report;
  std::vector<bool> hit(n, false);
  for (std::size_t gi = 0; gi < proposal.groups.size(); ++gi) {
    const auto& g = proposal.groups[gi];
    if (g.first > g.last || g.first >= n) continue;
    const std::size_t last = std::min(g.last, n - 1);
    for (std::size_t i = g.first; i <= last; ++i) hit[i] = true;
    const double d = group_interval({g.first, last}, substeps).length();
    if (d < bounds.min_seconds) {
      report.abnormal.push_back({gi, d, BoundKind::TooShort});
    } else if (d > bounds.max_seconds) {
      report.abnormal.push_back({gi, d, BoundKind::TooLong});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!hit[i]) report.missing.push_back(i);
  }
  return report;
}

AnnotationSet to_annotations(const AnnotationSet& source, const GroupingProposal& proposal) {
  const auto substeps = source.at_level(HierarchyLevel::Substep);
  AnnotationSet out;
  out.video_id = source.video_id;
  out.duration = source.duration;
  out.fps = source.fps;
  out.goal = proposal.goal_description;
  for (std::size_t i = 0; i < proposal.groups.size(); ++i) {
    out.instances.push_back({group_interval(proposal.groups[i], substeps),
                             i < proposal.step_descriptions.size() ? proposal.step_descriptions[i]
                                                                   : std::string{},
                             HierarchyLevel::Step});
  }
  out.instances.insert(out.instances.end(), substeps.begin(), substeps.end());
  return out;
}

KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                    std::uint64_t seed, std::size_t max_iterations, double tolerance) {
  const std::size_t n = points.size();
  if (k == 0 || k > n) throw DomainError("k must lie in [1, number of points]");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw DataError("k-means points differ in dimension");
  }

  Rng rng(seed);
  KMeansResult r;
  std::vector<bool> chosen(n, false);
  auto pick = [&](std::size_t i) {
    chosen[i] = true;
    r.centroids.push_back(points[i]);
  };
  pick(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 1))));
  std::vector<double> d2(n);
  while (r.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = chosen[i] ? 0.0 : std::numeric_limits<double>::infinity();
      for (const auto& c : r.centroids) d2[i] = std::min(d2[i], squared_distance(points[i], c));
      total += d2[i];
    }
    std::size_t next = n;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        next = i;
        if (u < d2[i]) break;
        u -= d2[i];
      }
    } else {
      next = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    pick(next);
  }

  r.assignment.assign(n, 0);
  for (std::size_t it = 0; it < std::max<std::size_t>(max_iterations, 1); ++it) {
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], r.centroids[c]);
        if (d < best) {
          best = d;
          r.assignment[i] = c;
        }
      }
      objective += best;
    }
    r.objective_trace.push_back(objective);
    if (objective == 0.0) break;
    if (r.objective_trace.size() > 1) {
      const double prev = r.objective_trace[r.objective_trace.size() - 2];
      if (prev - objective <= tolerance * prev) break;
    }

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[r.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[r.assignment[i]][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // an empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d) {
        r.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
  }
  return r;
}

Canonicalization kmeans_canonicalize(const std::vector<std::string>& descriptions, std::size_t k,
                                     Embedder& embedder, LlmClient& client, std::uint64_t seed) {
  std::vector<std::string> distinct;
  std::map<std::string, std::size_t> slot;
  for (const auto& d : descriptions) {
    if (slot.emplace(d, distinct.size()).second) distinct.push_back(d);
  }
  if (k == 0 || k > distinct.size()) {
    throw DomainError("k must lie in [1, number of distinct descriptions]");
  }

  const auto vectors = embedder.embed(distinct);
  const auto km = kmeans(vectors, k, seed);

  Canonicalization out;
  out.objective_trace = km.objective_trace;
  for (const auto& d : descriptions) out.assignment.push_back(km.assignment[slot.at(d)]);

  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::pair<double, std::size_t>> members;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      if (km.assignment[i] == c) members.emplace_back(squared_distance(vectors[i], km.centroids[c]), i);
    }
    if (members.empty()) {
      out.captions.emplace_back();
      continue;
    }
    std::sort(members.begin(), members.end());
    ChatRequest request;
    request.task = ChatTask::Caption;
    for (const auto& [dist, i] : members) request.items.push_back(distinct[i]);
    request.prompt = caption_prompt(request.items);
    const auto raw = client.complete(request);
    auto caption = trim(raw);
    if (caption.empty()) throw ParseError("empty cluster caption", raw);
    out.captions.push_back(std::move(caption));
  }
  return out;
}

}  // namespace hstream
