#include "hstream/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "hstream/errors.hpp"
#include "hstream/rng.hpp"

namespace hstream {

namespace {

constexpr double kGridSlack = 1e-9;
constexpr double kStateLogit = 10.0;

constexpr std::array<const char*, 12> kVerbs{"cut",  "wash",  "pour", "stir",  "open",   "close",
                                              "peel", "place", "take", "mix",   "rinse",  "slice"};
constexpr std::array<const char*, 12> kNouns{"onion", "pan",   "knife",  "bowl",  "tomato", "lid",
                                              "water", "board", "carrot", "spoon", "pot",    "oil"};
constexpr std::array<const char*, 8> kStepPhrases{
    "prepare vegetables", "heat the pan",   "cook the sauce",   "clean the counter",
    "boil water",         "season the dish", "plate the food",  "wash the dishes"};
constexpr std::array<const char*, 6> kGoals{"make a salad",     "cook pasta",  "bake bread",
                                            "brew coffee",      "fry eggs",    "make soup"};

struct FrameRange {
  std::int64_t lo;
  std::int64_t hi;
};

FrameRange grid_range(const Range& r, double fps) {
  return {static_cast<std::int64_t>(std::ceil(r.lo * fps - kGridSlack)),
          static_cast<std::int64_t>(std::floor(r.hi * fps + kGridSlack))};
}

// Seconds drawn from `r`, expressed in whole frames inside the range.
std::int64_t draw_frames(Rng& rng, const Range& r, double fps) {
  const auto fr = grid_range(r, fps);
  const auto f = static_cast<std::int64_t>(std::llround(rng.uniform(r.lo, r.hi) * fps));
  return std::clamp(f, fr.lo, fr.hi);
}

template <std::size_t N>
std::string pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(N - 1)))];
}

}  // namespace

void SimConfig::validate() const {
  if (!(fps > 0.0)) throw DomainError("fps must be positive");
  if (videos == 0) throw DomainError("at least one video is required");
  for (const Range* r : {&duration, &gap, &margin}) {
    if (!(r->lo >= 0.0 && r->lo <= r->hi)) throw DomainError("invalid seconds range");
  }
  if (steps_per_video.lo == 0 || steps_per_video.lo > steps_per_video.hi ||
      substeps_per_step.lo == 0 || substeps_per_step.lo > substeps_per_step.hi) {
    throw DomainError("invalid count range");
  }
  if (!(zero_gap_prob >= 0.0 && zero_gap_prob <= 1.0)) {
    throw DomainError("zero_gap_prob must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0)) throw DomainError("noise_sigma must be non-negative");
  if (min_substep_seconds * fps < 2.0 - kGridSlack) {
    throw DomainError("min_substep_seconds must span at least two frames");
  }
  if (feature_dim < 4) throw DomainError("feature_dim must be at least 4");
  for (const Range* r : {&gap, &margin}) {
    const auto fr = grid_range(*r, fps);
    if (fr.lo > fr.hi) throw DomainError("gap and margin ranges must contain a frame boundary");
  }
  histogram.validate();

  // Worst case: shortest video, most instances, longest gaps and margins.
  const auto n_max = static_cast<std::int64_t>(steps_per_video.hi * substeps_per_step.hi);
  const auto d_lo = static_cast<std::int64_t>(std::llround(duration.lo * fps));
  const auto min_f = static_cast<std::int64_t>(std::ceil(min_substep_seconds * fps - kGridSlack));
  const auto need = 2 * grid_range(margin, fps).hi + (n_max - 1) * grid_range(gap, fps).hi +
                    n_max * min_f;
  if (d_lo < need) {
    throw DomainError("duration range too short for the requested instances, gaps and margins");
  }
}

std::vector<AnnotationSet> gen_annotations(const SimConfig& cfg) {
  cfg.validate();
  const auto min_f = static_cast<std::int64_t>(std::ceil(cfg.min_substep_seconds * cfg.fps - kGridSlack));

  std::vector<AnnotationSet> out;
  out.reserve(cfg.videos);
  for (std::size_t v = 0; v < cfg.videos; ++v) {
    Rng rng(derive_seed(cfg.seed, v));
    AnnotationSet a;
    char id[32];
    std::snprintf(id, sizeof(id), "sim_%04zu", v);
    a.video_id = id;
    a.fps = cfg.fps;

    const auto total_f = static_cast<std::int64_t>(
        std::llround(rng.uniform(cfg.duration.lo, cfg.duration.hi) * cfg.fps));
    a.duration = static_cast<double>(total_f) / cfg.fps;

    const auto n_steps = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(cfg.steps_per_video.lo), static_cast<std::int64_t>(cfg.steps_per_video.hi)));
    std::vector<std::size_t> per_step(n_steps);
    std::size_t n = 0;
    for (auto& k : per_step) {
      k = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(cfg.substeps_per_step.lo),
                                                   static_cast<std::int64_t>(cfg.substeps_per_step.hi)));
      n += k;
    }

    std::vector<std::int64_t> gaps(n - 1);
    for (auto& g : gaps) g = rng.bernoulli(cfg.zero_gap_prob) ? 0 : draw_frames(rng, cfg.gap, cfg.fps);
    const std::int64_t lead = draw_frames(rng, cfg.margin, cfg.fps);
    const std::int64_t trail = draw_frames(rng, cfg.margin, cfg.fps);

    std::int64_t avail = total_f - lead - trail;
    for (auto g : gaps) avail -= g;
    const std::int64_t spare = avail - static_cast<std::int64_t>(n) * min_f;
    if (spare < 0) throw DomainError("instances do not fit the drawn duration");

    // Split the spare frames by random weights; remainders go to the first substeps.
    std::vector<double> w(n);
    double w_sum = 0.0;
    for (auto& x : w) {
      x = rng.uniform(0.5, 1.5);
      w_sum += x;
    }
    std::vector<std::int64_t> len(n, min_f);
    std::int64_t given = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto extra = static_cast<std::int64_t>(std::floor(static_cast<double>(spare) * w[i] / w_sum));
      len[i] += extra;
      given += extra;
    }
    for (std::size_t i = 0; given < spare; i = (i + 1) % n, ++given) ++len[i];

    std::int64_t cursor = lead;
    std::size_t idx = 0;
    std::vector<ActionInstance> steps;
    std::vector<ActionInstance> substeps;
    for (std::size_t s = 0; s < n_steps; ++s) {
      for (std::size_t k = 0; k < per_step[s]; ++k, ++idx) {
        if (idx > 0) cursor += gaps[idx - 1];
        const std::int64_t begin = cursor;
        const std::int64_t end = begin + len[idx];
        substeps.push_back({{static_cast<double>(begin) / cfg.fps, static_cast<double>(end) / cfg.fps},
                            pick(rng, kVerbs) + " " + pick(rng, kNouns),
                            HierarchyLevel::Substep});
        cursor = end;
      }
      const double first = substeps[substeps.size() - per_step[s]].interval.start;
      steps.push_back({{first, static_cast<double>(cursor) / cfg.fps}, pick(rng, kStepPhrases),
                       HierarchyLevel::Step});
    }
    a.goal = pick(rng, kGoals);
    a.instances = std::move(steps);
    a.instances.insert(a.instances.end(), substeps.begin(), substeps.end());
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

// Instance of `insts` covering t under the [start, end) rule (closed at the
// end of the stream).
const ActionInstance* covering(const std::vector<ActionInstance>& insts, double t, double duration) {
  for (const auto& inst : insts) {
    const auto& iv = inst.interval;
    if ((t >= iv.start && t < iv.end) || (t == iv.end && iv.end >= duration)) return &inst;
  }
  return nullptr;
}

std::vector<double> noisy_distribution(const std::vector<double>& probs, double sigma, Rng& rng) {
  std::vector<double> logits(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    logits[i] = std::log(std::max(probs[i], 1e-300));
    if (sigma > 0.0) logits[i] += sigma * rng.normal();
  }
  return softmax(logits);
}

}  // namespace

std::vector<FrameScores> gen_scores(const AnnotationSet& a, double noise_sigma,
                                    const HistogramConfig& hist, std::uint64_t seed) {
  hist.validate();
  Rng rng(seed);
  const auto substeps = a.at_level(HierarchyLevel::Substep);
  const auto steps = a.at_level(HierarchyLevel::Step);
  const std::vector<double> uniform(hist.bins, 1.0 / static_cast<double>(hist.bins));

  auto progress_dist = [&](const std::vector<ActionInstance>& insts, double t) {
    const auto* inst = covering(insts, t, a.duration);
    if (!inst || !(inst->interval.end > inst->interval.start)) {
      return noisy_distribution(uniform, noise_sigma, rng);
    }
    return noisy_distribution(histogram_target(progress_target(t, inst->interval), hist),
                              noise_sigma, rng);
  };

  const std::size_t n = a.frame_count();
  std::vector<FrameScores> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    FrameScores fs;
    fs.timestamp = a.frame_time(i);
    const auto state = static_cast<std::size_t>(state_target(fs.timestamp, a));
    std::vector<double> logits(kStateCount, 0.0);
    logits[state] = kStateLogit;
    for (auto& l : logits) {
      if (noise_sigma > 0.0) l += noise_sigma * rng.normal();
    }
    const auto probs = softmax(logits);
    std::copy(probs.begin(), probs.end(), fs.state_probs.begin());
    fs.step_progress = progress_dist(steps, fs.timestamp);
    fs.substep_progress = progress_dist(substeps, fs.timestamp);
    out.push_back(std::move(fs));
  }
  return out;
}

FeatureSequence gen_features(const AnnotationSet& a, std::size_t feature_dim, double noise_sigma,
                             std::uint64_t seed) {
  if (feature_dim < 4) throw DomainError("feature_dim must be at least 4");
  // Prototypes are shared by every video so that a scorer can learn them.
  Rng proto_rng(0x70726f746fULL);
  std::array<std::vector<double>, kStateCount> prototypes;
  for (auto& p : prototypes) {
    p.assign(feature_dim, 0.0);
    for (std::size_t d = 6; d < feature_dim; ++d) p[d] = proto_rng.normal();
  }

  Rng rng(seed);
  const auto substeps = a.at_level(HierarchyLevel::Substep);
  const auto steps = a.at_level(HierarchyLevel::Step);
  FeatureSequence seq;
  const std::size_t n = a.frame_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = a.frame_time(i);
    const auto state = state_target(t, a);
    std::vector<double> f = prototypes[static_cast<std::size_t>(state)];
    const auto* step = covering(steps, t, a.duration);
    const auto* sub = covering(substeps, t, a.duration);
    if (step) {
      const double p = progress_target(t, step->interval);
      f[0] = 1.0;
      f[2] = p;
      if (feature_dim > 4) f[4] = 1.0 - p;
    }
    if (sub) {
      const double p = progress_target(t, sub->interval);
      f[1] = 1.0;
      f[3] = p;
      if (feature_dim > 5) f[5] = 1.0 - p;
    }
    if (noise_sigma > 0.0) {
      for (auto& x : f) x += noise_sigma * rng.normal();
    }
    seq.timestamps.push_back(t);
    seq.rows.push_back(std::move(f));
  }
  return seq;
}

}  // namespace hstream
