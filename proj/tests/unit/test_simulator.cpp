#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hstream/errors.hpp"
#include "hstream/rng.hpp"
#include "hstream/scoring.hpp"
#include "hstream/simulator.hpp"

using namespace hstream;

namespace {

std::vector<Interval> level_intervals(const AnnotationSet& a, HierarchyLevel level) {
  std::vector<Interval> out;
  for (const auto& i : a.at_level(level)) out.push_back(i.interval);
  return out;
}

bool on_grid(double t, double fps) {
  const double k = t * fps;
  return std::abs(k - std::round(k)) < 1e-9;
}

}  // namespace

TEST_CASE("zero_gap_prob = 1 makes every neighbour touch") {
  SimConfig cfg;
  cfg.zero_gap_prob = 1.0;
  cfg.videos = 20;
  for (const auto& a : gen_annotations(cfg)) {
    for (auto level : {HierarchyLevel::Substep, HierarchyLevel::Step}) {
      const auto ivs = level_intervals(a, level);
      for (std::size_t i = 1; i < ivs.size(); ++i) CHECK(ivs[i].start == ivs[i - 1].end);
    }
  }
}

TEST_CASE("zero_gap_prob = 0 keeps gaps inside the configured range") {
  SimConfig cfg;
  cfg.zero_gap_prob = 0.0;
  cfg.gap = {1.0, 2.0};
  cfg.videos = 20;
  for (const auto& a : gen_annotations(cfg)) {
    for (auto level : {HierarchyLevel::Substep, HierarchyLevel::Step}) {
      const auto ivs = level_intervals(a, level);
      for (std::size_t i = 1; i < ivs.size(); ++i) {
        const double gap = ivs[i].start - ivs[i - 1].end;
        // Substeps in different steps are also separated by the step gap.
        CHECK(gap >= 1.0 - 1e-9);
        if (level == HierarchyLevel::Step) CHECK(gap <= 2.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("generation is deterministic per seed") {
  SimConfig cfg;
  cfg.seed = 5;
  const auto a = gen_annotations(cfg);
  CHECK(a == gen_annotations(cfg));
  cfg.seed = 6;
  CHECK_FALSE(a == gen_annotations(cfg));
  CHECK(gen_scores(a[0], 0.3, cfg.histogram, 1) == gen_scores(a[0], 0.3, cfg.histogram, 1));
  const auto f1 = gen_features(a[0], 8, 0.2, 1);
  const auto f2 = gen_features(a[0], 8, 0.2, 1);
  CHECK(f1.rows == f2.rows);
}

TEST_CASE("random configurations always produce valid nested annotations") {
  Rng rng(123);
  std::size_t videos = 0;
  while (videos < 10000) {
    SimConfig cfg;
    cfg.seed = rng.next_u64();
    cfg.videos = 50;
    cfg.fps = rng.bernoulli(0.5) ? 10.0 : 4.0;
    cfg.zero_gap_prob = rng.uniform();
    cfg.steps_per_video = {1, static_cast<std::size_t>(rng.uniform_int(1, 6))};
    cfg.substeps_per_step = {1, static_cast<std::size_t>(rng.uniform_int(1, 4))};
    for (const auto& a : gen_annotations(cfg)) {
      const auto v = validate_annotations(a, {true});
      CHECK(v.empty());
      CHECK(std::all_of(a.instances.begin(), a.instances.end(), [&](const ActionInstance& x) {
        return on_grid(x.interval.start, a.fps) && on_grid(x.interval.end, a.fps) &&
               x.interval.end > x.interval.start;
      }));
      CHECK(on_grid(a.duration, a.fps));
      CHECK(!a.goal.empty());
      ++videos;
    }
  }
}

TEST_CASE("every step is exactly covered by its substeps' span") {
  SimConfig cfg;
  cfg.videos = 10;
  for (const auto& a : gen_annotations(cfg)) {
    const auto steps = a.at_level(HierarchyLevel::Step);
    const auto subs = a.at_level(HierarchyLevel::Substep);
    for (const auto& s : steps) {
      double first = 1e18;
      double last = -1;
      for (const auto& x : subs) {
        if (x.interval.start >= s.interval.start && x.interval.end <= s.interval.end) {
          first = std::min(first, x.interval.start);
          last = std::max(last, x.interval.end);
        }
      }
      CHECK(first == s.interval.start);
      CHECK(last == s.interval.end);
    }
  }
}

TEST_CASE("noise-free scores decode to the annotation targets") {
  SimConfig cfg;
  cfg.videos = 3;
  for (const auto& a : gen_annotations(cfg)) {
    const auto scores = gen_scores(a, 0.0, cfg.histogram, 9);
    REQUIRE(scores.size() == a.frame_count());
    const auto targets = build_targets(a, [&] {
      std::vector<double> ts;
      for (const auto& s : scores) ts.push_back(s.timestamp);
      return ts;
    }(), cfg.histogram);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const auto& p = scores[i].state_probs;
      const auto argmax = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      CHECK(static_cast<FrameState>(argmax) == state_target(scores[i].timestamp, a));
      if (targets[i].substep_progress) {
        const double want = histogram_expectation(*targets[i].substep_progress, cfg.histogram);
        CHECK(std::abs(histogram_expectation(scores[i].substep_progress, cfg.histogram) - want) < 1e-9);
      }
    }
  }
}

TEST_CASE("features carry a linear readout of progress") {
  SimConfig cfg;
  cfg.videos = 2;
  for (const auto& a : gen_annotations(cfg)) {
    const auto f = gen_features(a, 8, 0.0, 3);
    REQUIRE(f.size() == a.frame_count());
    const auto steps = a.at_level(HierarchyLevel::Step);
    const auto subs = a.at_level(HierarchyLevel::Substep);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double t = f.timestamps[i];
      for (const auto& s : subs) {
        if (t >= s.interval.start && t < s.interval.end) {
          CHECK(f.rows[i][1] == 1.0);
          CHECK(f.rows[i][3] == progress_target(t, s.interval));
          CHECK(f.rows[i][3] + f.rows[i][5] == doctest::Approx(1.0));
        }
      }
      for (const auto& s : steps) {
        if (t >= s.interval.start && t < s.interval.end) CHECK(f.rows[i][2] == progress_target(t, s.interval));
      }
    }
  }
}

TEST_CASE("invalid and infeasible configurations") {
  SimConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.duration = {10, 12};
  cfg.steps_per_video = {6, 6};
  CHECK_THROWS_AS(gen_annotations(cfg), DomainError);
  cfg = {};
  cfg.zero_gap_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.fps = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.feature_dim = 3;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.steps_per_video = {4, 2};
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
