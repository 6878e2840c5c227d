#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hstream/core_model.hpp"

namespace hstream {

enum class DropReference {
  PreviousFrame,  // drop measured against the previous frame's progress
  RunningMax,     // drop measured against the highest progress since the instance opened
};

struct DetectorConfig {
  double start_threshold = 0.5;
  // Values above 1 can never be reached and disable progress-drop ends.
  double drop_delta = 0.4;
  double min_progress_for_drop = 0.5;
  bool close_incomplete_at_eos = true;
  DropReference drop_reference = DropReference::PreviousFrame;

  void validate() const;
  // Same thresholds with progress-drop ends disabled.
  DetectorConfig actionness_only() const;
};

enum class EventKind { InstanceStarted, InstanceEnded, GoalDue };

struct DetectionEvent {
  EventKind kind = EventKind::InstanceStarted;
  HierarchyLevel level = HierarchyLevel::Substep;
  Interval interval;
  double timestamp = 0.0;  // frame at which the event was raised

  bool operator==(const DetectionEvent&) const = default;
};

struct Emission {
  ActionInstance instance;
  double emit_time = 0.0;

  bool operator==(const Emission&) const = default;
};

struct DetectorState {
  struct Level {
    bool ongoing = false;
    double open_start = 0.0;
    double previous_progress = 0.0;
    double running_max = 0.0;
    bool suppressed_this_frame = false;

    bool operator==(const Level&) const = default;
  };

  std::array<Level, 2> levels{};  // [0] Substep, [1] Step
  std::optional<double> current_timestamp;
  std::optional<std::size_t> bins;
  bool finished = false;
  std::vector<Emission> log;  // append-only

  Level& at(HierarchyLevel level);
  const Level& at(HierarchyLevel level) const;
  bool ongoing(HierarchyLevel level) const { return at(level).ongoing; }

  bool operator==(const DetectorState&) const = default;
};

// Advance by one frame. Throws DataError on non-increasing timestamps or
// inconsistent bin counts, StateError after finish.
std::vector<DetectionEvent> step(DetectorState& state, const FrameScores& fs,
                                 const DetectorConfig& cfg);

// Close the stream. Throws StateError when called twice.
std::vector<DetectionEvent> finish(DetectorState& state, double final_timestamp,
                                   const DetectorConfig& cfg);

// Fold `step` over the scores (then `finish` at the last timestamp when
// requested); returns the emission log.
std::vector<Emission> run_stream(std::span<const FrameScores> scores, const DetectorConfig& cfg,
                                 bool finish_stream = true);

}  // namespace hstream
