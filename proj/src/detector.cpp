#include "hstream/detector.hpp"

#include <algorithm>
#include <utility>
#include <string>

#include "hstream/errors.hpp"
#include "hstream/scoring.hpp"

namespace hstream {

void DetectorConfig::validate() const {
  if (!(start_threshold > 0.0 && start_threshold < 1.0)) {
    throw DomainError("start_threshold must lie in (0, 1)");
  }
  if (!(drop_delta > 0.0)) throw DomainError("drop_delta must be positive");
  if (!(min_progress_for_drop >= 0.0 && min_progress_for_drop <= 1.0)) {
    throw DomainError("min_progress_for_drop must lie in [0, 1]");
  }
}

DetectorConfig DetectorConfig::actionness_only() const {
  DetectorConfig c = *this;
  c.drop_delta = 2.0;
  return c;
}

DetectorState::Level& DetectorState::at(HierarchyLevel level) {
  return const_cast<Level&>(std::as_const(*this).at(level));
}

const DetectorState::Level& DetectorState::at(HierarchyLevel level) const {
  switch (level) {
    case HierarchyLevel::Substep:
      return levels[0];
    case HierarchyLevel::Step:
      return levels[1];
    case HierarchyLevel::Goal:
      break;
  }
  throw DomainError("the detector tracks Substep and Step levels only");
}

namespace {

constexpr std::array<HierarchyLevel, 2> kTracked{HierarchyLevel::Substep, HierarchyLevel::Step};

void close(DetectorState& state, HierarchyLevel level, Interval iv, double now,
           std::vector<DetectionEvent>& events) {
  state.at(level).ongoing = false;
  events.push_back({EventKind::InstanceEnded, level, iv, now});
  state.log.push_back({ActionInstance{iv, {}, level}, now});
}

}  // namespace

std::vector<DetectionEvent> step(DetectorState& state, const FrameScores& fs,
                                 const DetectorConfig& cfg) {
  if (state.finished) throw StateError("detector stream already finished");
  if (state.current_timestamp && !(fs.timestamp > *state.current_timestamp)) {
    throw DataError("frame timestamps must be strictly increasing (got " +
                    std::to_string(fs.timestamp) + " after " +
                    std::to_string(*state.current_timestamp) + ")");
  }
  const std::size_t bins = fs.step_progress.size();
  if (bins == 0 || fs.substep_progress.size() != bins) {
    throw DataError("progress distributions must be non-empty and equally sized");
  }
  if (state.bins && *state.bins != bins) throw DataError("bin count changed within the stream");

  const HistogramConfig hist{bins, 0.15, false};
  const std::optional<double> previous_timestamp = state.current_timestamp;
  state.current_timestamp = fs.timestamp;
  state.bins = bins;

  std::vector<DetectionEvent> events;
  for (auto level : kTracked) {
    auto& ls = state.at(level);
    ls.suppressed_this_frame = false;
    const double p = histogram_expectation(fs.progress(level), hist);
    const double actionness = fs.actionness(level);

    if (ls.ongoing) {
      const double reference =
          cfg.drop_reference == DropReference::RunningMax ? ls.running_max : ls.previous_progress;
      if (reference - p >= cfg.drop_delta && reference >= cfg.min_progress_for_drop) {
        // The drop frame itself is background for this level.
        const double end = previous_timestamp.value_or(fs.timestamp);
        close(state, level, {ls.open_start, end}, fs.timestamp, events);
        ls.suppressed_this_frame = true;
      } else if (actionness < cfg.start_threshold) {
        close(state, level, {ls.open_start, fs.timestamp}, fs.timestamp, events);
      }
    }

    if (!ls.ongoing && !ls.suppressed_this_frame && actionness >= cfg.start_threshold) {
      ls.ongoing = true;
      ls.open_start = fs.timestamp;
      ls.running_max = p;
      events.push_back({EventKind::InstanceStarted, level, {fs.timestamp, fs.timestamp}, fs.timestamp});
    }

    if (ls.ongoing) {
      ls.previous_progress = p;
      ls.running_max = std::max(ls.running_max, p);
    }
  }
  return events;
}

std::vector<DetectionEvent> finish(DetectorState& state, double final_timestamp,
                                   const DetectorConfig& cfg) {
  if (state.finished) throw StateError("finish called twice");
  state.finished = true;
  std::vector<DetectionEvent> events;
  for (auto level : kTracked) {
    auto& ls = state.at(level);
    if (!ls.ongoing) continue;
    if (cfg.close_incomplete_at_eos) {
      close(state, level, {ls.open_start, final_timestamp}, final_timestamp, events);
    } else {
      ls.ongoing = false;
    }
  }
  events.push_back({EventKind::GoalDue, HierarchyLevel::Goal, {0.0, final_timestamp}, final_timestamp});
  return events;
}

std::vector<Emission> run_stream(std::span<const FrameScores> scores, const DetectorConfig& cfg,
                                 bool finish_stream) {
  cfg.validate();
  DetectorState state;
  for (const auto& fs : scores) step(state, fs, cfg);
  if (finish_stream) {
    finish(state, scores.empty() ? 0.0 : scores.back().timestamp, cfg);
  }
  return state.log;
}

}  // namespace hstream
