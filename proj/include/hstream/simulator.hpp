#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hstream/core_model.hpp"
#include "hstream/scoring.hpp"

namespace hstream {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
};

struct SimConfig {
  std::uint64_t seed = 0;
  std::size_t videos = 10;
  Range duration{120.0, 240.0};
  CountRange steps_per_video{3, 6};
  CountRange substeps_per_step{2, 4};
  // Probability that consecutive same-level instances touch with no gap.
  double zero_gap_prob = 0.5;
  Range gap{1.0, 2.0};
  // Background before the first and after the last step.
  Range margin{1.0, 3.0};
  double min_substep_seconds = 2.0;
  double noise_sigma = 0.0;
  double fps = 10.0;
  std::size_t feature_dim = 8;
  HistogramConfig histogram;

  // Throws DomainError for malformed or infeasible settings.
  void validate() const;
};

// Hierarchical annotations; boundaries lie on the frame grid. Throws
// DomainError when the ranges cannot fit the instances.
std::vector<AnnotationSet> gen_annotations(const SimConfig& cfg);

// Oracle score stream over the annotation frame grid, with logit-space noise.
std::vector<FrameScores> gen_scores(const AnnotationSet& a, double noise_sigma,
                                    const HistogramConfig& hist, std::uint64_t seed);

// Per-frame feature vectors: coordinates 0/1 flag step/substep activity,
// 2/3 carry step/substep progress, 4/5 their complements, the rest a fixed
// random prototype per state. Gaussian noise of `noise_sigma` on every entry.
FeatureSequence gen_features(const AnnotationSet& a, std::size_t feature_dim, double noise_sigma,
                             std::uint64_t seed);

}  // namespace hstream
