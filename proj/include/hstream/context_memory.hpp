#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hstream/core_model.hpp"

namespace hstream {

// Set of levels a frame belonged to when it was inserted.
struct LevelSet {
  bool substep = false;
  bool step = false;

  bool empty() const { return !substep && !step; }
  bool contains(HierarchyLevel level) const;
  bool operator==(const LevelSet&) const = default;
};

struct FrameRef {
  double timestamp = 0.0;
  LevelSet member_levels;
  std::string handle;

  bool operator==(const FrameRef&) const = default;
};

struct Prediction {
  HierarchyLevel level = HierarchyLevel::Substep;
  Interval interval;
  std::string short_form;
  std::string long_form;
  double created_at = 0.0;
};

struct RetrievalBundle {
  std::vector<FrameRef> frames;
  std::vector<std::string> prior_predictions;  // oldest first
  HierarchyLevel level = HierarchyLevel::Substep;
  Interval interval;
};

struct MemoryPolicy {
  double substep_spacing = 1.0;
  double step_spacing = 3.3;
  std::size_t step_history = 10;
};

// Greedy-from-start thinning: keep the earliest frame, then each next frame at
// least `spacing` seconds after the last kept one.
std::vector<FrameRef> sample_with_spacing(const std::vector<FrameRef>& frames, double spacing);

class ContextMemory {
 public:
  explicit ContextMemory(MemoryPolicy policy = {}) : policy_(policy) {}

  // Stores the frame iff member_levels is non-empty. Throws DataError unless
  // timestamps strictly increase across calls.
  void insert_frame(double timestamp, LevelSet member_levels, std::string handle);

  // Throws DataError when the instance extends past the last inserted frame.
  RetrievalBundle query(const ActionInstance& instance) const;

  // Appends the prediction; a Step prediction prunes the frames inside its
  // interval down to the one closest to the interval midpoint.
  void commit_prediction(Prediction p);

  // Greedy sampling over every stored frame in the interval (comparison baseline
  // for membership-based step sampling).
  std::vector<FrameRef> uniform_sample(const Interval& iv, double spacing) const;

  const std::vector<FrameRef>& frames() const { return frames_; }
  const std::vector<Prediction>& predictions() const { return predictions_; }
  const MemoryPolicy& policy() const { return policy_; }

  // Debug snapshot; not a stable format.
  std::string snapshot_json() const;

 private:
  struct StepRun {
    double start = 0.0;
    std::optional<double> end;  // last frame of the run; nullopt while open
  };

  std::vector<FrameRef> frames_in(const Interval& iv, std::optional<HierarchyLevel> member) const;

  MemoryPolicy policy_;
  std::vector<FrameRef> frames_;
  std::vector<Prediction> predictions_;
  std::vector<StepRun> step_runs_;
  std::optional<double> last_timestamp_;
  bool last_in_step_ = false;
};

}  // namespace hstream
