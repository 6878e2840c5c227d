#include "hstream/context_memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "hstream/errors.hpp"

namespace hstream {

bool LevelSet::contains(HierarchyLevel level) const {
  switch (level) {
    case HierarchyLevel::Substep:
      return substep;
    case HierarchyLevel::Step:
      return step;
    case HierarchyLevel::Goal:
      break;
  }
  return false;
}

std::vector<FrameRef> sample_with_spacing(const std::vector<FrameRef>& frames, double spacing) {
  std::vector<FrameRef> out;
  for (const auto& f : frames) {
    if (out.empty() || f.timestamp >= out.back().timestamp + spacing) out.push_back(f);
  }
  return out;
}

void ContextMemory::insert_frame(double timestamp, LevelSet member_levels, std::string handle) {
  if (last_timestamp_ && !(timestamp > *last_timestamp_)) {
    throw DataError("context memory frames must be inserted in increasing time order");
  }
  last_timestamp_ = timestamp;

  if (member_levels.step && !last_in_step_) {
    step_runs_.push_back({timestamp, std::nullopt});
  } else if (!member_levels.step && last_in_step_) {
    step_runs_.back().end = timestamp;
  }
  last_in_step_ = member_levels.step;

  if (member_levels.empty()) return;
  frames_.push_back({timestamp, member_levels, std::move(handle)});
}

std::vector<FrameRef> ContextMemory::frames_in(const Interval& iv,
                                               std::optional<HierarchyLevel> member) const {
  std::vector<FrameRef> out;
  for (const auto& f : frames_) {
    if (f.timestamp < iv.start || f.timestamp > iv.end) continue;
    if (member && !f.member_levels.contains(*member)) continue;
    out.push_back(f);
  }
  return out;
}

std::vector<FrameRef> ContextMemory::uniform_sample(const Interval& iv, double spacing) const {
  return sample_with_spacing(frames_in(iv, std::nullopt), spacing);
}

RetrievalBundle ContextMemory::query(const ActionInstance& instance) const {
  const auto& iv = instance.interval;
  if (!last_timestamp_ || iv.end > *last_timestamp_) {
    throw DataError("query interval is not covered by the context memory");
  }

  RetrievalBundle bundle;
  bundle.level = instance.level;
  bundle.interval = iv;

  switch (instance.level) {
    case HierarchyLevel::Substep: {
      bundle.frames = sample_with_spacing(frames_in(iv, HierarchyLevel::Substep),
                                          policy_.substep_spacing);
      // Earlier substeps of the step that was ongoing when this substep began.
      const auto run = std::find_if(step_runs_.rbegin(), step_runs_.rend(), [&](const StepRun& r) {
        return r.start <= iv.start &&
               iv.start <= r.end.value_or(std::numeric_limits<double>::infinity());
      });
      if (run != step_runs_.rend()) {
        const double run_end = run->end.value_or(std::numeric_limits<double>::infinity());
        for (const auto& p : predictions_) {
          if (p.level == HierarchyLevel::Substep && p.interval.start >= run->start &&
              p.interval.end <= run_end) {
            bundle.prior_predictions.push_back(p.long_form);
          }
        }
      }
      break;
    }
    case HierarchyLevel::Step: {
      bundle.frames = sample_with_spacing(frames_in(iv, HierarchyLevel::Substep),
                                          policy_.step_spacing);
      std::vector<const Prediction*> steps;
      for (const auto& p : predictions_) {
        if (p.level != HierarchyLevel::Step) continue;
        // Frames of a described step are already pruned.
        if (p.interval.start < iv.end && iv.start < p.interval.end) {
          throw DataError("step query overlaps an already described step");
        }
        steps.push_back(&p);
      }
      const std::size_t skip =
          steps.size() > policy_.step_history ? steps.size() - policy_.step_history : 0;
      for (std::size_t i = skip; i < steps.size(); ++i) {
        bundle.prior_predictions.push_back(steps[i]->long_form);
      }
      break;
    }
    case HierarchyLevel::Goal: {
      for (const auto& p : predictions_) {
        if (p.level != HierarchyLevel::Step) continue;
        bundle.prior_predictions.push_back(p.short_form);
        const auto inside = frames_in(p.interval, std::nullopt);
        if (inside.empty()) continue;
        const double mid = 0.5 * (p.interval.start + p.interval.end);
        const auto best = std::min_element(inside.begin(), inside.end(),
                                           [&](const FrameRef& a, const FrameRef& b) {
                                             return std::abs(a.timestamp - mid) <
                                                    std::abs(b.timestamp - mid);
                                           });
        bundle.frames.push_back(*best);
      }
      std::sort(bundle.frames.begin(), bundle.frames.end(),
                [](const FrameRef& a, const FrameRef& b) { return a.timestamp < b.timestamp; });
      bundle.frames.erase(std::unique(bundle.frames.begin(), bundle.frames.end()),
                          bundle.frames.end());
      break;
    }
  }
  return bundle;
}

void ContextMemory::commit_prediction(Prediction p) {
  if (p.level == HierarchyLevel::Step) {
    const auto& iv = p.interval;
    const double mid = 0.5 * (iv.start + iv.end);
    std::optional<std::size_t> keep;
    for (std::size_t i = 0; i < frames_.size(); ++i) {
      const double t = frames_[i].timestamp;
      if (t < iv.start || t > iv.end) continue;
      if (!keep || std::abs(t - mid) < std::abs(frames_[*keep].timestamp - mid)) keep = i;
    }
    if (keep) {
      const double kept = frames_[*keep].timestamp;
      std::erase_if(frames_, [&](const FrameRef& f) {
        return f.timestamp >= iv.start && f.timestamp <= iv.end && f.timestamp != kept;
      });
    }
  }
  predictions_.push_back(std::move(p));
}

std::string ContextMemory::snapshot_json() const {
  nlohmann::json j;
  j["frames"] = nlohmann::json::array();
  for (const auto& f : frames_) {
    nlohmann::json levels = nlohmann::json::array();
    if (f.member_levels.substep) levels.push_back(1);
    if (f.member_levels.step) levels.push_back(2);
    j["frames"].push_back({{"timestamp", f.timestamp}, {"levels", levels}, {"handle", f.handle}});
  }
  j["predictions"] = nlohmann::json::array();
  for (const auto& p : predictions_) {
    j["predictions"].push_back({{"level", static_cast<int>(p.level)},
                                {"start", p.interval.start},
                                {"end", p.interval.end},
                                {"short_form", p.short_form},
                                {"long_form", p.long_form},
                                {"created_at", p.created_at}});
  }
  return j.dump(2);
}

}  // namespace hstream
