#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hstream/context_memory.hpp"
#include "hstream/core_model.hpp"
#include "hstream/describer.hpp"
#include "hstream/detector.hpp"

namespace hstream {

struct SessionOptions {
  DetectorConfig detector;
  MemoryPolicy memory;
  // Each finished instance is also described from the first f of its span,
  // for every f here.
  std::vector<double> partial;
};

struct DescribedInstance {
  ActionInstance instance;  // description holds the short form
  std::string long_form;
  double emit_time = 0.0;
};

struct PartialDescription {
  HierarchyLevel level = HierarchyLevel::Substep;
  Interval full;
  double fraction = 0.0;
  std::string short_form;
};

struct SessionResult {
  std::vector<DescribedInstance> instances;  // emission order
  std::string goal;
  double goal_time = 0.0;
  std::vector<PartialDescription> partials;
};

using FrameHandleFn = std::function<std::string(std::size_t index, double timestamp)>;

// Streams the scores through the detector, feeds the context memory and asks
// the describer for every finished instance and finally for the goal.
SessionResult run_session(std::span<const FrameScores> scores, const SessionOptions& options,
                          Describer& describer, const FrameHandleFn& frame_handle);

}  // namespace hstream
