#pragma once

// Random small scorers and windows for finite-difference gradient checks.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hstream/rng.hpp"
#include "hstream/scoring.hpp"
#include "support/oracles.hpp"

namespace fixture {

struct GradCase {
  hstream::ScorerModel model;
  std::vector<std::vector<double>> features;
  std::vector<hstream::FrameTarget> targets;
  hstream::HiddenState initial;
};

inline std::vector<double> random_distribution(hstream::Rng& rng, std::size_t n) {
  std::vector<double> d(n);
  double total = 0.0;
  for (auto& x : d) total += x = rng.uniform(0.05, 1.0);
  for (auto& x : d) x /= total;
  return d;
}

// hidden <= 8, T <= 12; every head receives a target in at least one frame.
inline GradCase random_grad_case(std::uint64_t seed) {
  hstream::Rng rng(seed);
  hstream::ScorerConfig cfg;
  cfg.feature_dim = static_cast<std::size_t>(rng.uniform_int(1, 5));
  cfg.recurrent_layers = static_cast<std::size_t>(rng.uniform_int(1, 3));
  cfg.hidden_dim = static_cast<std::size_t>(rng.uniform_int(2, 8));
  cfg.histogram.bins = static_cast<std::size_t>(rng.uniform_int(2, 6));
  cfg.state_loss_weight = rng.uniform(0.5, 1.5);
  cfg.step_loss_weight = rng.uniform(0.5, 1.5);
  cfg.substep_loss_weight = rng.uniform(0.5, 1.5);

  GradCase c{hstream::ScorerModel::random(cfg, hstream::derive_seed(seed, 1)), {}, {}, {}};
  const auto T = static_cast<std::size_t>(rng.uniform_int(1, 12));
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> x(cfg.feature_dim);
    for (auto& v : x) v = rng.normal();
    c.features.push_back(std::move(x));
    hstream::FrameTarget ft;
    ft.state = static_cast<hstream::FrameState>(rng.uniform_int(0, 2));
    if (t == 0 || rng.bernoulli(0.6)) ft.step_progress = random_distribution(rng, cfg.histogram.bins);
    if (t == 0 || rng.bernoulli(0.6)) {
      ft.substep_progress = random_distribution(rng, cfg.histogram.bins);
    }
    c.targets.push_back(std::move(ft));
  }
  c.initial = hstream::zero_hidden(c.model);
  for (auto& layer : c.initial) {
    for (auto& h : layer) h = rng.uniform(-0.5, 0.5);
  }
  return c;
}

struct GradCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

// Every parameter coordinate against a central difference. Coordinates whose
// gradients are both below `floor` in magnitude are compared on that scale.
inline GradCheck check_gradient(const GradCase& c, double h = 1e-5, double floor = 1e-4) {
  const auto analytic = hstream::window_loss(c.model, c.features, c.targets, c.initial).grad;
  hstream::ScorerModel probe = c.model;
  GradCheck out;
  for (std::size_t i = 0; i < probe.parameter_count(); ++i) {
    const double x0 = probe.parameters()[i];
    probe.parameters()[i] = x0 + h;
    const double up = hstream::window_loss(probe, c.features, c.targets, c.initial).loss;
    probe.parameters()[i] = x0 - h;
    const double down = hstream::window_loss(probe, c.features, c.targets, c.initial).loss;
    probe.parameters()[i] = x0;
    const double numeric = (up - down) / (2.0 * h);
    out.max_relative_error =
        std::max(out.max_relative_error, oracle::relative_error(analytic[i], numeric, floor));
    ++out.checked;
  }
  return out;
}

}  // namespace fixture
