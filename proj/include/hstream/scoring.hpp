#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hstream/core_model.hpp"

namespace hstream {

// Histogram-loss discretisation of progress on the fixed support [0, 1].
struct HistogramConfig {
  std::size_t bins = 10;
  double sigma = 0.15;
  // Place the Gaussian so that the decoded expectation of the target equals the
  // requested progress (within the decodable range). Off gives the plain
  // truncated HL-Gauss target centred on p.
  bool mean_correction = true;

  std::vector<double> edges() const;
  std::vector<double> centers() const;
  void validate() const;
};

// Linear progress of t through iv, in [0, 1].
double progress_target(double t, const Interval& iv);

// State class of time t given the annotations. An instance covers [start, end),
// and the final frame (t == duration) counts as inside instances ending there.
FrameState state_target(double t, const AnnotationSet& a);

// Truncated Gaussian mass per bin around `mu`, renormalised over [0, 1].
std::vector<double> gaussian_bin_masses(double mu, const HistogramConfig& cfg);

// Soft classification target for progress p.
std::vector<double> histogram_target(double p, const HistogramConfig& cfg);

// Sum of dist_i * center_i. Throws DomainError unless dist sums to 1 within 1e-6.
double histogram_expectation(std::span<const double> dist, const HistogramConfig& cfg);

std::vector<double> softmax(std::span<const double> logits);

struct CrossEntropy {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

// -sum target_i * log softmax(logits)_i and its gradient softmax - target.
CrossEntropy soft_cross_entropy(std::span<const double> logits, std::span<const double> target);

struct ScorerConfig {
  std::size_t feature_dim = 8;
  std::size_t recurrent_layers = 3;
  std::size_t hidden_dim = 32;
  double learning_rate = 3e-4;
  double weight_decay = 0.01;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  std::size_t bptt_window = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double state_loss_weight = 1.0;
  double step_loss_weight = 1.0;
  double substep_loss_weight = 1.0;
  HistogramConfig histogram;

  void validate() const;
};

// Per-frame features with their timestamps.
struct FeatureSequence {
  std::vector<double> timestamps;
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return rows.size(); }
};

// Supervision for one frame. Progress targets are absent outside instances.
struct FrameTarget {
  FrameState state = FrameState::Background;
  std::optional<std::vector<double>> step_progress;
  std::optional<std::vector<double>> substep_progress;
};

std::vector<FrameTarget> build_targets(const AnnotationSet& a, std::span<const double> timestamps,
                                       const HistogramConfig& hist);

// Elman recurrent stack with a state head and two progress heads, all weights
// in one flat parameter vector.
class ScorerModel {
 public:
  struct Block {
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
  };
  struct Layer {
    Block input;      // hidden x in
    Block recurrent;  // hidden x hidden
    Block bias;       // hidden x 1
  };
  struct Head {
    Block weight;  // out x hidden
    Block bias;    // out x 1
  };

  explicit ScorerModel(ScorerConfig cfg);

  // Uniform(-1/sqrt(hidden), 1/sqrt(hidden)) initialisation.
  static ScorerModel random(const ScorerConfig& cfg, std::uint64_t seed);

  const ScorerConfig& config() const { return cfg_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  const std::vector<Layer>& layers() const { return layers_; }
  const Head& state_head() const { return state_head_; }
  const Head& step_head() const { return step_head_; }
  const Head& substep_head() const { return substep_head_; }

  std::string to_json() const;
  static ScorerModel from_json(const std::string& text);

 private:
  ScorerConfig cfg_;
  std::vector<Layer> layers_;
  Head state_head_;
  Head step_head_;
  Head substep_head_;
  std::vector<double> params_;
};

// Hidden state of every layer, layer-major.
using HiddenState = std::vector<std::vector<double>>;

HiddenState zero_hidden(const ScorerModel& model);

struct WindowLoss {
  double loss = 0.0;           // summed over frames
  std::size_t frames = 0;
  std::vector<double> grad;    // d loss / d parameters
  HiddenState final_hidden;
};

// Loss and exact parameter gradient over one window, starting from `initial`
// (treated as a constant).
WindowLoss window_loss(const ScorerModel& model, std::span<const std::vector<double>> features,
                       std::span<const FrameTarget> targets, const HiddenState& initial);

struct TrainingVideo {
  FeatureSequence features;
  AnnotationSet annotations;
};

struct TrainResult {
  ScorerModel model;
  std::vector<double> loss_trace;  // mean per-frame loss for each epoch
};

// AdamW with truncated BPTT. Deterministic for a given seed.
TrainResult train_scorer(const std::vector<TrainingVideo>& data, const ScorerConfig& cfg,
                         std::uint64_t seed);

// Causal forward pass; one FrameScores per input row.
std::vector<FrameScores> infer_scores(const ScorerModel& model, const FeatureSequence& features);

}  // namespace hstream
