#include <doctest.h>

#include <string>

#include "hstream/context_memory.hpp"
#include "hstream/errors.hpp"

using namespace hstream;

namespace {

constexpr LevelSet kNone{};
constexpr LevelSet kStepOnly{false, true};
constexpr LevelSet kBoth{true, true};

std::string handle(double t) { return "f" + std::to_string(t); }

Prediction step_prediction(Interval iv, const std::string& text) {
  return {HierarchyLevel::Step, iv, text + "-short", text + "-long", iv.end};
}

}  // namespace

TEST_CASE("frames outside every instance are not stored") {
  ContextMemory m;
  m.insert_frame(0.0, kNone, "a");
  CHECK(m.frames().empty());
  m.insert_frame(1.0, kBoth, "b");
  REQUIRE(m.frames().size() == 1);
  CHECK(m.frames()[0] == FrameRef{1.0, kBoth, "b"});
  CHECK_THROWS_AS(m.insert_frame(1.0, kBoth, "c"), DataError);
  CHECK_THROWS_AS(m.insert_frame(0.5, kBoth, "c"), DataError);
}

TEST_CASE("background-only memory answers with empty frame sets") {
  ContextMemory m;
  for (int i = 0; i < 100; ++i) m.insert_frame(i, kNone, handle(i));
  CHECK(m.query({{10, 20}, {}, HierarchyLevel::Substep}).frames.empty());
  CHECK(m.query({{0, 99}, {}, HierarchyLevel::Step}).frames.empty());
  const auto goal = m.query({{0, 99}, {}, HierarchyLevel::Goal});
  CHECK(goal.frames.empty());
  CHECK(goal.prior_predictions.empty());
}

TEST_CASE("substep query samples greedily at one-second spacing") {
  // 4.5 s substep with a frame every 0.25 s.
  ContextMemory m;
  for (int i = 0; i <= 18; ++i) m.insert_frame(10.0 + 0.25 * i, kBoth, handle(i));
  const auto b = m.query({{10.0, 14.5}, {}, HierarchyLevel::Substep});
  REQUIRE(b.frames.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(b.frames[i].timestamp == 10.0 + static_cast<double>(i));
}

TEST_CASE("queries past the last inserted frame are rejected") {
  ContextMemory m;
  m.insert_frame(0.0, kBoth, "a");
  CHECK_THROWS_AS(m.query({{0, 1}, {}, HierarchyLevel::Substep}), DataError);
}

TEST_CASE("step query keeps at most the ten latest step predictions") {
  ContextMemory m;
  double t = 0.0;
  for (int s = 0; s < 12; ++s) {
    m.insert_frame(t, kStepOnly, handle(t));
    m.insert_frame(t + 1, kStepOnly, handle(t + 1));
    m.commit_prediction(step_prediction({t, t + 1}, "s" + std::to_string(s)));
    t += 2;
  }
  for (int i = 0; i < 5; ++i, t += 1) m.insert_frame(t, kBoth, handle(t));
  const auto b = m.query({{t - 5, t - 1}, {}, HierarchyLevel::Step});
  REQUIRE(b.prior_predictions.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(b.prior_predictions[i] == "s" + std::to_string(i + 2) + "-long");
  }
}

TEST_CASE("step query samples substep frames only, 3.3 s apart") {
  ContextMemory m;
  // Step [0, 20] at 10 fps; substeps [2, 8] and [12, 18].
  for (int i = 0; i <= 200; ++i) {
    const double t = i / 10.0;
    const bool sub = (t >= 2 && t <= 8) || (t >= 12 && t <= 18);
    m.insert_frame(t, {sub, true}, handle(t));
  }
  const auto b = m.query({{0, 20}, {}, HierarchyLevel::Step});
  REQUIRE(b.frames.size() == 4);
  CHECK(b.frames[0].timestamp == 2.0);
  CHECK(b.frames[1].timestamp == doctest::Approx(5.3));
  CHECK(b.frames[2].timestamp == 12.0);
  CHECK(b.frames[3].timestamp == doctest::Approx(15.3));
  const auto uniform = m.uniform_sample({0, 20}, 3.3);
  CHECK(uniform.size() == 7);
  CHECK(b.frames.size() <= uniform.size());
}

TEST_CASE("substep history is scoped to the current step") {
  ContextMemory m;
  auto commit_sub = [&](Interval iv, const std::string& s) {
    m.commit_prediction({HierarchyLevel::Substep, iv, s, s + "-long", iv.end});
  };
  // Step run 1: t = 0..4, run 2: t = 6..10, background at 5.
  for (int t = 0; t <= 10; ++t) m.insert_frame(t, t == 5 ? kNone : kBoth, handle(t));
  commit_sub({0, 2}, "a");
  commit_sub({2, 4}, "b");
  commit_sub({6, 8}, "c");
  const auto first = m.query({{3, 4}, {}, HierarchyLevel::Substep});
  CHECK(first.prior_predictions == std::vector<std::string>{"a-long", "b-long"});
  const auto second = m.query({{8, 10}, {}, HierarchyLevel::Substep});
  CHECK(second.prior_predictions == std::vector<std::string>{"c-long"});
}

TEST_CASE("committing a step prunes its frames to the one nearest the midpoint") {
  ContextMemory m;
  m.insert_frame(5.0, kBoth, "outside");
  for (int i = 0; i < 60; ++i) m.insert_frame(10.0 + 0.5 * i, kBoth, handle(i));
  m.insert_frame(41.0, kBoth, "after");
  const auto before = m.frames().size();
  m.commit_prediction({HierarchyLevel::Substep, {10, 20}, "s", "s", 20});
  CHECK(m.frames().size() == before);
  m.commit_prediction(step_prediction({10, 40}, "x"));
  std::size_t inside = 0;
  for (const auto& f : m.frames()) inside += f.timestamp >= 10 && f.timestamp <= 40;
  CHECK(inside == 1);
  CHECK(m.frames().size() == 3);
  CHECK(m.frames()[1].timestamp == 25.0);
}

TEST_CASE("goal query returns one frame per described step and short forms") {
  ContextMemory m;
  double t = 0;
  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < 10; ++i, t += 1) m.insert_frame(t, kBoth, handle(t));
    m.commit_prediction(step_prediction({t - 10, t - 1}, "s" + std::to_string(s)));
  }
  const auto b = m.query({{0, t - 1}, {}, HierarchyLevel::Goal});
  CHECK(b.frames.size() == 3);
  CHECK(b.prior_predictions == std::vector<std::string>{"s0-short", "s1-short", "s2-short"});
  for (std::size_t i = 1; i < b.frames.size(); ++i) {
    CHECK(b.frames[i - 1].timestamp < b.frames[i].timestamp);
  }
}

TEST_CASE("step queries overlapping a described step are rejected") {
  ContextMemory m;
  for (int t = 0; t <= 10; ++t) m.insert_frame(t, kBoth, handle(t));
  m.commit_prediction(step_prediction({0, 5}, "a"));
  CHECK_THROWS_AS(m.query({{4, 9}, {}, HierarchyLevel::Step}), DataError);
  CHECK_NOTHROW(m.query({{6, 9}, {}, HierarchyLevel::Step}));
}

TEST_CASE("queries are pure reads") {
  ContextMemory m;
  for (int t = 0; t <= 10; ++t) m.insert_frame(t, kBoth, handle(t));
  const auto snap = m.snapshot_json();
  m.query({{0, 10}, {}, HierarchyLevel::Step});
  m.query({{0, 10}, {}, HierarchyLevel::Goal});
  CHECK(m.snapshot_json() == snap);
}
