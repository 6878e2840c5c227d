#include <doctest.h>

#include "hstream/errors.hpp"
#include "hstream/metrics.hpp"
#include "hstream/rng.hpp"
#include "support/oracles.hpp"
#include "support/stub_server.hpp"

using namespace hstream;

namespace {

std::vector<Interval> random_intervals(Rng& rng, std::size_t max_n) {
  std::vector<Interval> out(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(max_n))));
  for (auto& iv : out) {
    const double a = rng.uniform(0, 50);
    iv = {a, a + rng.uniform(0.5, 15)};
  }
  return out;
}

std::vector<ActionInstance> described(const std::vector<Interval>& ivs,
                                      const std::vector<std::string>& texts) {
  std::vector<ActionInstance> out;
  for (std::size_t i = 0; i < ivs.size(); ++i) out.push_back({ivs[i], texts[i], HierarchyLevel::Substep});
  return out;
}

}  // namespace

TEST_CASE("tIoU values") {
  CHECK(tiou({0, 10}, {0, 10}) == 1.0);
  CHECK(tiou({0, 10}, {20, 30}) == 0.0);
  CHECK(tiou({0, 10}, {10, 20}) == 0.0);
  CHECK(tiou({0, 10}, {5, 15}) == doctest::Approx(1.0 / 3.0));
  CHECK(tiou({3, 3}, {3, 3}) == 0.0);
}

TEST_CASE("Hungarian F1 small cases") {
  const std::vector<Interval> one{{0, 10}};
  CHECK(hungarian_f1(one, one, 0.5).f1 == 1.0);
  CHECK(hungarian_f1({}, {}, 0.5).f1 == 1.0);
  CHECK(hungarian_f1({}, {}, 0.5, {0.0}).f1 == 0.0);
  CHECK(hungarian_f1(one, {}, 0.5).f1 == 0.0);

  // Touching ground truth merged into one prediction: one hit out of three.
  const std::vector<Interval> gt{{0, 10}, {10, 20}};
  const std::vector<Interval> merged{{0, 9}};
  const auto s = hungarian_f1(gt, merged, 0.5);
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(s.match.tp == 1);
  CHECK(s.match.fn == 1);
  CHECK(s.match.fp == 0);
  CHECK_THROWS_AS(hungarian_f1(gt, merged, 0.0), DomainError);
}

TEST_CASE("Hungarian prefers the globally best assignment over greedy") {
  // Greedy would give p0 to g1; the optimum pairs p0-g0 and p1-g1.
  const std::vector<Interval> gt{{0, 10}, {4, 14}};
  const std::vector<Interval> pred{{3, 13}, {5, 15}};
  const auto h = hungarian_f1(gt, pred, 0.5);
  CHECK(h.match.tp == 2);
  const auto g = greedy_match(gt, pred, 0.5);
  CHECK(g.tp == 2);
  CHECK(g.fn == 1);  // both predictions claim g1
}

TEST_CASE("assignment solver on rectangular matrices") {
  const std::vector<double> p{1, 5, 2,  //
                              4, 1, 3};
  const auto a = max_weight_assignment(p, 2, 3);
  CHECK(a == std::vector<std::size_t>{1, 0});
  const std::vector<double> tall{1, 9, 2, 3, 8, 1};
  const auto b = max_weight_assignment(tall, 3, 2);
  std::size_t unassigned = 0;
  for (auto x : b) unassigned += x == static_cast<std::size_t>(-1);
  CHECK(unassigned == 1);
  CHECK(b[0] == 1);
  CHECK(b[2] == 0);
  CHECK_THROWS_AS(max_weight_assignment(tall, 2, 2), DomainError);
}

TEST_CASE("Hungarian F1 equals the brute-force oracle on random cases") {
  Rng rng(77);
  for (int c = 0; c < 200; ++c) {
    const auto gt = random_intervals(rng, 5);
    const auto pred = random_intervals(rng, 5);
    for (double thr : {0.3, 0.5, 0.7}) {
      CHECK(hungarian_f1(gt, pred, thr).f1 == oracle::brute_force_f1(gt, pred, thr));
    }
  }
}

TEST_CASE("greedy matching") {
  const std::vector<Interval> gt{{0, 10}};
  CHECK(greedy_match(gt, std::vector<Interval>{{20, 30}}, 0.5).fp == 1);
  const auto none = greedy_match(gt, {}, 0.5);
  CHECK(none.pairs.empty());
  CHECK(none.fn == 1);
}

TEST_CASE("mock embedder") {
  MockEmbedder e(64);
  const auto v = e.embed({"Cut the onion", "cut the ONION!", "boil water", ""});
  REQUIRE(v.size() == 4);
  CHECK(v[0].size() == 64);
  CHECK(cosine(v[0], v[1]) == doctest::Approx(1.0));
  CHECK(cosine(v[0], v[2]) < 0.5);
  double n = 0;
  for (double x : v[2]) n += x * x;
  CHECK(n == doctest::Approx(1.0));
  CHECK(cosine(v[3], v[0]) == 0.0);
}

TEST_CASE("top-k F1") {
  MockEmbedder e;
  const std::vector<Interval> ivs{{0, 10}, {10, 20}, {20, 30}};
  const auto gt = described(ivs, {"cut onion", "boil water", "fry egg"});
  SUBCASE("identical text is rank 1") {
    const std::vector<std::string> corpus{"cut onion", "boil water", "fry egg", "wash pan"};
    CHECK(topk_f1(gt, gt, 0.5, 1, corpus, e) == 1.0);
    CHECK(CorpusIndex(corpus, e).size() == 4);
  }
  SUBCASE("wrong text fails at k = 1 but passes at corpus size") {
    const auto pred = described(ivs, {"wash pan", "boil water", "fry egg"});
    const std::vector<std::string> corpus{"cut onion", "boil water", "fry egg", "wash pan"};
    CHECK(topk_f1(gt, pred, 0.5, 1, corpus, e) == doctest::Approx(2.0 / 3.0));
    CHECK(topk_f1(gt, pred, 0.5, 4, corpus, e) == hungarian_f1(ivs, ivs, 0.5).f1);
  }
  SUBCASE("duplicates in the corpus are counted once") {
    const std::vector<std::string> corpus{"cut onion", "cut onion", "boil water", "fry egg"};
    CHECK(CorpusIndex(corpus, e).size() == 3);
  }
  CHECK_THROWS_AS(topk_f1(gt, gt, 0.5, 1, std::vector<std::string>{}, e), DataError);
  CHECK_THROWS_AS(topk_f1(gt, gt, 0.5, 0, std::vector<std::string>{"cut onion"}, e), DomainError);
}

TEST_CASE("judge payloads and scores") {
  MatchResult m;
  m.pairs = {{0, 0, 0.9}, {1, 2, 0.8}, {2, 1, 0.6}};
  const std::vector<JudgeCriterion> all{JudgeCriterion::CI, JudgeCriterion::DO, JudgeCriterion::CU,
                                        JudgeCriterion::TU};
  const auto payloads = judge_requests(m, {"g0", "g1", "g2"}, {"p0", "p1", "p2"}, all, "What?");
  REQUIRE(payloads.size() == 12);
  CHECK(payloads[4].pair == 1);
  CHECK(payloads[4].criterion == JudgeCriterion::CI);
  CHECK(payloads[4].user.find("g1") != std::string::npos);
  CHECK(payloads[4].user.find("p2") != std::string::npos);
  CHECK(payloads[4].user.find("What?") != std::string::npos);
  CHECK(payloads[4].user.find("{pred}") == std::string::npos);
  CHECK_FALSE(payloads[0].system.empty());
  CHECK_THROWS_AS(judge_requests(m, {"g0"}, {"p0"}, all, "q"), DataError);

  CHECK(parse_judge("{'score': 4}") == 4.0);
  CHECK(parse_judge(R"({"score": 3})") == 3.0);
  CHECK_FALSE(parse_judge("great answer").has_value());
  CHECK_FALSE(parse_judge("{'score': 9}").has_value());

  const auto s = summarize_judge({"{'score': 5}", "{'score': 5}", "{'score': 4}", "{'score': 5}",
                                  "{'score': 5}", "no idea"});
  REQUIRE(s.mean.has_value());
  CHECK(*s.mean == doctest::Approx(4.8));
  CHECK(s.scored == 5);
  CHECK(s.missing == 1);
  CHECK_FALSE(summarize_judge({"x"}).mean.has_value());
}

TEST_CASE("AEDT") {
  const std::vector<Interval> gt{{0, 10}, {10, 20}};
  const std::vector<TimedPrediction> exact{{{0, 10}, 10.0}, {{10, 20}, 20.0}};
  CHECK(aedt(gt, exact, 0.5)->mean_abs == 0.0);
  const std::vector<TimedPrediction> late{{{0, 10}, 12.0}, {{30, 40}, 40.0}};
  const auto r = aedt(gt, late, 0.5);
  REQUIRE(r.has_value());
  CHECK(r->mean_abs == 2.0);
  CHECK(r->mean_signed == 2.0);
  CHECK(r->count == 1);
  CHECK_FALSE(aedt(gt, std::vector<TimedPrediction>{{{50, 60}, 60.0}}, 0.5).has_value());
  CHECK_THROWS_AS(aedt(gt, std::vector<TimedPrediction>{{{0, 10}, std::nullopt}}, 0.5), DataError);
}

TEST_CASE("goal accuracy") {
  MockEmbedder e;
  const std::vector<std::string> truth{"make a salad", "fix a bike", "bake bread"};
  CHECK(goal_accuracy(truth, truth, e) == 1.0);
  CHECK(goal_accuracy({"make a salad", "bake bread", "bake bread"}, truth, e) ==
        doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(goal_accuracy({}, {}, e), DataError);
  CHECK_THROWS_AS(goal_accuracy({"a"}, truth, e), DataError);
}

TEST_CASE("HTTP embedder against a stub server") {
  stub::Server s({{500, "busy"},
                  {200, R"({"data":[{"index":1,"embedding":[0,2]},{"index":0,"embedding":[3,4]}]})"}});
  HttpEmbedderConfig cfg;
  cfg.endpoint = s.url("/v1/embeddings");
  cfg.retry.initial_backoff_seconds = 0.001;
  HttpEmbedder e(cfg);
  const auto v = e.embed({"a", "b"});
  REQUIRE(v.size() == 2);
  CHECK(v[0][0] == doctest::Approx(0.6));
  CHECK(v[0][1] == doctest::Approx(0.8));
  CHECK(v[1][1] == doctest::Approx(1.0));
  CHECK(s.calls() == 2);

  stub::Server bad({{200, R"({"data":[]})"}});
  cfg.endpoint = bad.url("/v1/embeddings");
  HttpEmbedder e2(cfg);
  CHECK_THROWS_AS(e2.embed({"a"}), ParseError);
}
