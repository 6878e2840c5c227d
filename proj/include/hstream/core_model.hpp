#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hstream {

enum class HierarchyLevel : int { Substep = 1, Step = 2, Goal = 3 };

std::string_view level_name(HierarchyLevel level);
// Throws DataError for values outside {1,2,3}.
HierarchyLevel level_from_int(int value);

struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool contains(double t) const { return t >= start && t <= end; }
  bool operator==(const Interval&) const = default;
};

struct ActionInstance {
  Interval interval;
  std::string description;
  HierarchyLevel level = HierarchyLevel::Substep;

  bool operator==(const ActionInstance&) const = default;
};

struct AnnotationSet {
  std::string video_id;
  double duration = 0.0;
  double fps = 1.0;
  std::string goal;
  std::vector<ActionInstance> instances;

  // Instances at one level, in stored order.
  std::vector<ActionInstance> at_level(HierarchyLevel level) const;
  // Frame grid: timestamps index / fps for every index with timestamp <= duration.
  std::size_t frame_count() const;
  double frame_time(std::size_t index) const { return static_cast<double>(index) / fps; }

  bool operator==(const AnnotationSet&) const = default;
};

// Classes of the state-emitting head.
enum class FrameState : int { Background = 0, Step = 1, StepAndSubstep = 2 };
inline constexpr std::size_t kStateCount = 3;

struct FrameScores {
  double timestamp = 0.0;
  std::array<double, kStateCount> state_probs{1.0, 0.0, 0.0};
  std::vector<double> step_progress;
  std::vector<double> substep_progress;

  // Marginal probability that an instance of `level` is ongoing.
  double actionness(HierarchyLevel level) const;
  const std::vector<double>& progress(HierarchyLevel level) const;

  bool operator==(const FrameScores&) const = default;
};

struct Violation {
  // Instance index the violation refers to; nullopt for set-level problems.
  std::optional<std::size_t> instance;
  std::string reason;
};

struct ValidationOptions {
  // Require every substep to lie inside some step.
  bool strict_nesting = false;
};

// Every AnnotationSet invariant violation; empty means valid.
std::vector<Violation> validate_annotations(const AnnotationSet& a,
                                            const ValidationOptions& options = {});

}  // namespace hstream
