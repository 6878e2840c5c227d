#include "hstream/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hstream/errors.hpp"

namespace hstream {

std::string_view level_name(HierarchyLevel level) {
  switch (level) {
    case HierarchyLevel::Substep:
      return "Substep";
    case HierarchyLevel::Step:
      return "Step";
    case HierarchyLevel::Goal:
      return "Goal";
  }
  return "Unknown";
}

HierarchyLevel level_from_int(int value) {
  if (value < 1 || value > 3) {
    throw DataError("hierarchy level must be 1, 2 or 3, got " + std::to_string(value));
  }
  return static_cast<HierarchyLevel>(value);
}

std::vector<ActionInstance> AnnotationSet::at_level(HierarchyLevel level) const {
  std::vector<ActionInstance> out;
  for (const auto& inst : instances) {
    if (inst.level == level) out.push_back(inst);
  }
  return out;
}

std::size_t AnnotationSet::frame_count() const {
  if (!(fps > 0.0) || duration < 0.0) return 0;
  // Small slack so that e.g. 10.0 s at 10 fps includes the frame at exactly 10.0.
  return static_cast<std::size_t>(std::floor(duration * fps + 1e-9)) + 1;
}

double FrameScores::actionness(HierarchyLevel level) const {
  const double step = state_probs[static_cast<std::size_t>(FrameState::Step)];
  const double both = state_probs[static_cast<std::size_t>(FrameState::StepAndSubstep)];
  switch (level) {
    case HierarchyLevel::Substep:
      return both;
    case HierarchyLevel::Step:
      return step + both;
    case HierarchyLevel::Goal:
      break;
  }
  throw DomainError("actionness is defined for Substep and Step levels only");
}

const std::vector<double>& FrameScores::progress(HierarchyLevel level) const {
  switch (level) {
    case HierarchyLevel::Substep:
      return substep_progress;
    case HierarchyLevel::Step:
      return step_progress;
    case HierarchyLevel::Goal:
      break;
  }
  throw DomainError("progress is defined for Substep and Step levels only");
}

std::vector<Violation> validate_annotations(const AnnotationSet& a,
                                            const ValidationOptions& options) {
  std::vector<Violation> out;
  if (!(a.duration >= 0.0) || !std::isfinite(a.duration)) {
    out.push_back({std::nullopt, "duration must be a finite non-negative number"});
  }
  if (!(a.fps > 0.0) || !std::isfinite(a.fps)) {
    out.push_back({std::nullopt, "fps must be positive"});
  }

  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    const auto& iv = a.instances[i].interval;
    if (!std::isfinite(iv.start) || !std::isfinite(iv.end)) {
      out.push_back({i, "non-finite endpoint"});
      continue;
    }
    if (iv.start < 0.0) out.push_back({i, "negative start"});
    if (iv.start > iv.end) out.push_back({i, "start after end"});
    if (iv.end > a.duration) out.push_back({i, "exceeds duration"});
    if (a.instances[i].level == HierarchyLevel::Goal &&
        (iv.start != 0.0 || iv.end != a.duration)) {
      out.push_back({i, "goal instance does not span the video"});
    }
  }

  for (auto level : {HierarchyLevel::Substep, HierarchyLevel::Step}) {
    std::vector<std::size_t> seen;
    for (std::size_t i = 0; i < a.instances.size(); ++i) {
      if (a.instances[i].level != level) continue;
      const auto& c = a.instances[i].interval;
      if (!seen.empty() && c.start < a.instances[seen.back()].interval.start) {
        out.push_back({i, "not sorted by start at level " + std::string(level_name(level))});
      }
      const bool overlaps = std::any_of(seen.begin(), seen.end(), [&](std::size_t j) {
        const auto& p = a.instances[j].interval;
        return c.start < p.end && p.start < c.end;
      });
      if (overlaps) out.push_back({i, "overlap at level " + std::string(level_name(level))});
      seen.push_back(i);
    }
  }

  if (options.strict_nesting) {
    const auto steps = a.at_level(HierarchyLevel::Step);
    for (std::size_t i = 0; i < a.instances.size(); ++i) {
      if (a.instances[i].level != HierarchyLevel::Substep) continue;
      const auto& s = a.instances[i].interval;
      const bool nested = std::any_of(steps.begin(), steps.end(), [&](const ActionInstance& st) {
        return st.interval.start <= s.start && s.end <= st.interval.end;
      });
      if (!nested) out.push_back({i, "substep outside every step"});
    }
  }
  return out;
}

}  // namespace hstream
