#include "hstream/session.hpp"

#include "hstream/errors.hpp"

namespace hstream {

namespace {

bool ended_here(const std::vector<DetectionEvent>& events, HierarchyLevel level, double ts) {
  for (const auto& e : events) {
    if (e.kind == EventKind::InstanceEnded && e.level == level && e.interval.end == ts) return true;
  }
  return false;
}

class Runner {
 public:
  Runner(const SessionOptions& options, Describer& describer)
      : options_(options), describer_(describer), memory_(options.memory) {}

  ContextMemory& memory() { return memory_; }
  SessionResult& result() { return result_; }

  void on_event(const DetectionEvent& e) {
    if (e.kind == EventKind::InstanceEnded) {
      describe_instance(e);
    } else if (e.kind == EventKind::GoalDue) {
      const auto bundle = memory_.query({e.interval, {}, HierarchyLevel::Goal});
      result_.goal = describer_.describe(bundle, build_request(bundle)).short_form;
      result_.goal_time = e.timestamp;
    }
  }

 private:
  void describe_instance(const DetectionEvent& e) {
    for (double f : options_.partial) {
      const Interval cut{e.interval.start, e.interval.start + f * e.interval.length()};
      const auto bundle = memory_.query({cut, {}, e.level});
      result_.partials.push_back(
          {e.level, e.interval, f, describer_.describe(bundle, build_request(bundle)).short_form});
    }
    const auto bundle = memory_.query({e.interval, {}, e.level});
    const auto reply = describer_.describe(bundle, build_request(bundle));
    memory_.commit_prediction({e.level, e.interval, reply.short_form, reply.long_form_after, e.timestamp});
    result_.instances.push_back(
        {{e.interval, reply.short_form, e.level}, reply.long_form_after, e.timestamp});
  }

  const SessionOptions& options_;
  Describer& describer_;
  ContextMemory memory_;
  SessionResult result_;
};

}  // namespace

SessionResult run_session(std::span<const FrameScores> scores, const SessionOptions& options,
                          Describer& describer, const FrameHandleFn& frame_handle) {
  options.detector.validate();
  for (double f : options.partial) {
    if (!(f > 0.0 && f < 1.0)) throw DomainError("partial fractions must lie in (0, 1)");
  }
  if (scores.empty()) throw DataError("score stream is empty");

  Runner runner(options, describer);
  DetectorState state;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& fs = scores[i];
    const auto events = step(state, fs, options.detector);
    LevelSet levels;
    levels.substep = state.ongoing(HierarchyLevel::Substep) ||
                     ended_here(events, HierarchyLevel::Substep, fs.timestamp);
    levels.step = state.ongoing(HierarchyLevel::Step) ||
                  ended_here(events, HierarchyLevel::Step, fs.timestamp);
    runner.memory().insert_frame(fs.timestamp, levels, frame_handle(i, fs.timestamp));
    for (const auto& e : events) runner.on_event(e);
  }
  for (const auto& e : finish(state, scores.back().timestamp, options.detector)) runner.on_event(e);
  return std::move(runner.result());
}

}  // namespace hstream
