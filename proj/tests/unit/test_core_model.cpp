#include <doctest.h>

#include "hstream/core_model.hpp"
#include "hstream/errors.hpp"

using namespace hstream;

namespace {

AnnotationSet video(double duration, std::vector<ActionInstance> instances) {
  AnnotationSet a;
  a.video_id = "v";
  a.duration = duration;
  a.fps = 1.0;
  a.instances = std::move(instances);
  return a;
}

bool has_reason(const std::vector<Violation>& vs, const std::string& reason) {
  for (const auto& v : vs) {
    if (v.reason.find(reason) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("hierarchy levels are ordered and round-trip through integers") {
  CHECK(static_cast<int>(HierarchyLevel::Substep) == 1);
  CHECK(static_cast<int>(HierarchyLevel::Step) == 2);
  CHECK(static_cast<int>(HierarchyLevel::Goal) == 3);
  CHECK(HierarchyLevel::Substep < HierarchyLevel::Step);
  CHECK(HierarchyLevel::Step < HierarchyLevel::Goal);
  for (int i = 1; i <= 3; ++i) CHECK(static_cast<int>(level_from_int(i)) == i);
  CHECK_THROWS_AS(level_from_int(0), DataError);
  CHECK_THROWS_AS(level_from_int(4), DataError);
}

TEST_CASE("touching substeps are valid") {
  const auto a = video(10, {{{0, 5}, "a", HierarchyLevel::Substep}, {{5, 10}, "b", HierarchyLevel::Substep}});
  CHECK(validate_annotations(a).empty());
}

TEST_CASE("overlapping substeps are reported with the instance index") {
  const auto a = video(10, {{{0, 6}, "a", HierarchyLevel::Substep}, {{5, 10}, "b", HierarchyLevel::Substep}});
  const auto vs = validate_annotations(a);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].reason == "overlap at level Substep");
  CHECK(vs[0].instance == std::optional<std::size_t>(1));
}

TEST_CASE("instances past the duration are reported") {
  const auto a = video(10, {{{0, 12}, "a", HierarchyLevel::Substep}});
  CHECK(has_reason(validate_annotations(a), "exceeds duration"));
}

TEST_CASE("overlap is checked per level only") {
  const auto a = video(10, {{{0, 10}, "s", HierarchyLevel::Step},
                            {{0, 4}, "a", HierarchyLevel::Substep},
                            {{4, 9}, "b", HierarchyLevel::Substep}});
  CHECK(validate_annotations(a).empty());
}

TEST_CASE("unsorted instances, reversed intervals and bad metadata") {
  auto a = video(10, {{{5, 6}, "a", HierarchyLevel::Step}, {{1, 2}, "b", HierarchyLevel::Step}});
  CHECK(has_reason(validate_annotations(a), "not sorted by start at level Step"));

  a = video(10, {{{3, 2}, "a", HierarchyLevel::Substep}});
  CHECK(has_reason(validate_annotations(a), "start after end"));

  a = video(10, {{{-1, 2}, "a", HierarchyLevel::Substep}});
  CHECK(has_reason(validate_annotations(a), "negative start"));

  a = video(10, {});
  a.fps = 0.0;
  CHECK(has_reason(validate_annotations(a), "fps must be positive"));
}

TEST_CASE("an overlap with any earlier instance is found, not only the neighbour") {
  const auto a = video(20, {{{0, 15}, "a", HierarchyLevel::Step},
                            {{1, 2}, "b", HierarchyLevel::Step},
                            {{10, 12}, "c", HierarchyLevel::Step}});
  const auto vs = validate_annotations(a);
  std::size_t overlaps = 0;
  for (const auto& v : vs) overlaps += v.reason == "overlap at level Step";
  CHECK(overlaps == 2);
}

TEST_CASE("strict nesting is optional") {
  const auto a = video(10, {{{0, 4}, "s", HierarchyLevel::Step}, {{5, 6}, "x", HierarchyLevel::Substep}});
  CHECK(validate_annotations(a).empty());
  CHECK(has_reason(validate_annotations(a, {true}), "substep outside every step"));
}

TEST_CASE("goal instances must span the video") {
  const auto a = video(10, {{{0, 9}, "g", HierarchyLevel::Goal}});
  CHECK(has_reason(validate_annotations(a), "goal instance does not span the video"));
  const auto ok = video(10, {{{0, 10}, "g", HierarchyLevel::Goal}});
  CHECK(validate_annotations(ok).empty());
}

TEST_CASE("frame grid includes the final timestamp") {
  AnnotationSet a;
  a.duration = 10.0;
  a.fps = 10.0;
  CHECK(a.frame_count() == 101);
  CHECK(a.frame_time(100) == 10.0);
  CHECK(a.frame_time(3) == 0.3);
}

TEST_CASE("actionness marginalises the state distribution") {
  FrameScores fs;
  fs.state_probs = {0.2, 0.3, 0.5};
  CHECK(fs.actionness(HierarchyLevel::Step) == doctest::Approx(0.8));
  CHECK(fs.actionness(HierarchyLevel::Substep) == doctest::Approx(0.5));
  CHECK_THROWS_AS(fs.actionness(HierarchyLevel::Goal), DomainError);
}
