#include "hstream/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "hstream/config.hpp"
#include "hstream/errors.hpp"
#include "hstream/rng.hpp"

namespace hstream {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// P(a <= Z <= b) for standard normal Z, accurate in both tails.
double normal_mass(double a, double b) {
  if (a > 0.0) return normal_sf(a) - normal_sf(b);
  return normal_cdf(b) - normal_cdf(a);
}

double center_expectation(const std::vector<double>& dist, const std::vector<double>& centers) {
  double e = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) e += dist[i] * centers[i];
  return e;
}

}  // namespace

std::vector<double> HistogramConfig::edges() const {
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = static_cast<double>(i) / static_cast<double>(bins);
  return e;
}

std::vector<double> HistogramConfig::centers() const {
  std::vector<double> c(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    c[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(bins);
  }
  return c;
}

void HistogramConfig::validate() const {
  if (bins == 0) throw DomainError("histogram bins must be positive");
  if (!(sigma > 0.0)) throw DomainError("histogram sigma must be positive");
}

double progress_target(double t, const Interval& iv) {
  if (!(iv.end > iv.start)) throw DomainError("progress of a zero-length interval is undefined");
  if (t < iv.start || t > iv.end) throw DomainError("time outside the interval");
  return (t - iv.start) / (iv.end - iv.start);
}

FrameState state_target(double t, const AnnotationSet& a) {
  bool in_step = false;
  bool in_substep = false;
  for (const auto& inst : a.instances) {
    const auto& iv = inst.interval;
    const bool inside = (t >= iv.start && t < iv.end) || (t == iv.end && iv.end >= a.duration);
    if (!inside) continue;
    if (inst.level == HierarchyLevel::Substep) in_substep = true;
    if (inst.level == HierarchyLevel::Step) in_step = true;
  }
  if (in_substep) return FrameState::StepAndSubstep;
  if (in_step) return FrameState::Step;
  return FrameState::Background;
}

std::vector<double> gaussian_bin_masses(double mu, const HistogramConfig& cfg) {
  cfg.validate();
  const auto e = cfg.edges();
  std::vector<double> m(cfg.bins);
  double total = 0.0;
  for (std::size_t i = 0; i < cfg.bins; ++i) {
    m[i] = normal_mass((e[i] - mu) / cfg.sigma, (e[i + 1] - mu) / cfg.sigma);
    total += m[i];
  }
  if (!(total > 0.0)) {
    std::fill(m.begin(), m.end(), 0.0);
    m[mu <= 0.5 ? 0 : cfg.bins - 1] = 1.0;
    return m;
  }
  for (auto& x : m) x /= total;
  return m;
}

std::vector<double> histogram_target(double p, const HistogramConfig& cfg) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("progress must lie in [0, 1]");
  cfg.validate();
  if (!cfg.mean_correction) return gaussian_bin_masses(p, cfg);

  // The decoded mean is strictly increasing in the Gaussian location, so the
  // location reproducing p is found by bisection and clamped to the bracket.
  const auto centers = cfg.centers();
  double lo = -1.0;
  double hi = 2.0;
  if (p <= center_expectation(gaussian_bin_masses(lo, cfg), centers)) {
    return gaussian_bin_masses(lo, cfg);
  }
  if (p >= center_expectation(gaussian_bin_masses(hi, cfg), centers)) {
    return gaussian_bin_masses(hi, cfg);
  }
  for (int it = 0; it < 48; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (center_expectation(gaussian_bin_masses(mid, cfg), centers) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return gaussian_bin_masses(0.5 * (lo + hi), cfg);
}

double histogram_expectation(std::span<const double> dist, const HistogramConfig& cfg) {
  if (dist.size() != cfg.bins) throw DomainError("distribution size does not match bin count");
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6) throw DomainError("distribution does not sum to 1");
  const auto c = cfg.centers();
  double e = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) e += dist[i] * c[i];
  return e;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (auto& x : out) x /= z;
  return out;
}

CrossEntropy soft_cross_entropy(std::span<const double> logits, std::span<const double> target) {
  if (logits.size() != target.size()) throw DomainError("logits and target sizes differ");
  CrossEntropy ce;
  if (logits.empty()) return ce;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);
  ce.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double log_p = logits[i] - lse;
    ce.loss -= target[i] * log_p;
    ce.grad[i] = std::exp(log_p) - target[i];
  }
  return ce;
}

void ScorerConfig::validate() const {
  if (feature_dim == 0 || recurrent_layers == 0 || hidden_dim == 0 || batch_size == 0 ||
      epochs == 0 || bptt_window == 0) {
    throw DomainError("scorer dimensions must be positive");
  }
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (weight_decay < 0.0) throw DomainError("weight decay must be non-negative");
  histogram.validate();
}

std::vector<FrameTarget> build_targets(const AnnotationSet& a, std::span<const double> timestamps,
                                       const HistogramConfig& hist) {
  const auto substeps = a.at_level(HierarchyLevel::Substep);
  const auto steps = a.at_level(HierarchyLevel::Step);
  auto progress_for = [&](double t, const std::vector<ActionInstance>& insts)
      -> std::optional<std::vector<double>> {
    for (const auto& inst : insts) {
      const auto& iv = inst.interval;
      const bool inside = (t >= iv.start && t < iv.end) || (t == iv.end && iv.end >= a.duration);
      if (inside && iv.end > iv.start) return histogram_target(progress_target(t, iv), hist);
    }
    return std::nullopt;
  };

  std::vector<FrameTarget> out;
  out.reserve(timestamps.size());
  for (double t : timestamps) {
    FrameTarget ft;
    ft.state = state_target(t, a);
    ft.step_progress = progress_for(t, steps);
    ft.substep_progress = progress_for(t, substeps);
    out.push_back(std::move(ft));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ScorerModel

ScorerModel::ScorerModel(ScorerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t offset = 0;
  auto block = [&](std::size_t rows, std::size_t cols) {
    Block b{offset, rows, cols};
    offset += rows * cols;
    return b;
  };
  const std::size_t h = cfg_.hidden_dim;
  for (std::size_t l = 0; l < cfg_.recurrent_layers; ++l) {
    Layer layer;
    layer.input = block(h, l == 0 ? cfg_.feature_dim : h);
    layer.recurrent = block(h, h);
    layer.bias = block(h, 1);
    layers_.push_back(layer);
  }
  const std::size_t b = cfg_.histogram.bins;
  state_head_ = {block(kStateCount, h), block(kStateCount, 1)};
  step_head_ = {block(b, h), block(b, 1)};
  substep_head_ = {block(b, h), block(b, 1)};
  params_.assign(offset, 0.0);
}

ScorerModel ScorerModel::random(const ScorerConfig& cfg, std::uint64_t seed) {
  ScorerModel m(cfg);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  for (auto& p : m.params_) p = rng.uniform(-bound, bound);
  return m;
}

std::string ScorerModel::to_json() const {
  nlohmann::json j;
  j["config"] = cfg_;
  j["parameters"] = params_;
  return j.dump();
}

ScorerModel ScorerModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.contains("config") || !j.contains("parameters")) {
    throw DataError("model file lacks config or parameters");
  }
  ScorerModel m(j.at("config").get<ScorerConfig>());
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != m.params_.size()) {
    throw DataError("model parameter count does not match its config");
  }
  m.params_ = std::move(params);
  return m;
}

HiddenState zero_hidden(const ScorerModel& model) {
  return HiddenState(model.config().recurrent_layers,
                     std::vector<double>(model.config().hidden_dim, 0.0));
}

namespace {

// out = W x + b for a (rows x cols) block.
void affine(const double* w, const double* b, const double* x, std::size_t rows, std::size_t cols,
            double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* wr = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] = acc;
  }
}

// One recurrent step across the stack; `hidden` is updated in place.
void recurrent_step(const ScorerModel& model, const std::vector<double>& x, HiddenState& hidden) {
  const double* p = model.parameters().data();
  const std::size_t h = model.config().hidden_dim;
  std::vector<double> pre(h);
  const std::vector<double>* input = &x;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& layer = model.layers()[l];
    affine(p + layer.input.offset, p + layer.bias.offset, input->data(), h, layer.input.cols,
           pre.data());
    const double* wh = p + layer.recurrent.offset;
    for (std::size_t r = 0; r < h; ++r) {
      double acc = pre[r];
      const double* row = wh + r * h;
      for (std::size_t c = 0; c < h; ++c) acc += row[c] * hidden[l][c];
      pre[r] = std::tanh(acc);
    }
    hidden[l] = pre;
    input = &hidden[l];
  }
}

std::vector<double> head_logits(const ScorerModel& model, const ScorerModel::Head& head,
                                const std::vector<double>& top) {
  const double* p = model.parameters().data();
  std::vector<double> out(head.weight.rows);
  affine(p + head.weight.offset, p + head.bias.offset, top.data(), head.weight.rows,
         head.weight.cols, out.data());
  return out;
}

void check_features(const ScorerModel& model, std::span<const std::vector<double>> rows) {
  for (const auto& r : rows) {
    if (r.size() != model.config().feature_dim) {
      throw DataError("feature dimension " + std::to_string(r.size()) + " does not match model (" +
                      std::to_string(model.config().feature_dim) + ")");
    }
  }
}

}  // namespace

WindowLoss window_loss(const ScorerModel& model, std::span<const std::vector<double>> features,
                       std::span<const FrameTarget> targets, const HiddenState& initial) {
  if (features.size() != targets.size()) throw DataError("features and targets differ in length");
  check_features(model, features);
  const auto& cfg = model.config();
  const std::size_t T = features.size();
  const std::size_t L = cfg.recurrent_layers;
  const std::size_t H = cfg.hidden_dim;
  const double* p = model.parameters().data();

  // acts[t][l] = activation of layer l at time t.
  std::vector<HiddenState> acts(T, HiddenState(L));
  HiddenState hidden = initial;

  WindowLoss out;
  out.grad.assign(model.parameter_count(), 0.0);
  double* g = out.grad.data();
  std::vector<std::vector<double>> d_top(T, std::vector<double>(H, 0.0));

  std::vector<double> state_target(kStateCount);
  auto accumulate_head = [&](const ScorerModel::Head& head, const std::vector<double>& top,
                             std::span<const double> target, double weight, std::size_t t) {
    const auto logits = head_logits(model, head, top);
    const auto ce = soft_cross_entropy(logits, target);
    out.loss += weight * ce.loss;
    const std::size_t rows = head.weight.rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = weight * ce.grad[r];
      g[head.bias.offset + r] += gr;
      double* gw = g + head.weight.offset + r * H;
      const double* w = p + head.weight.offset + r * H;
      for (std::size_t c = 0; c < H; ++c) {
        gw[c] += gr * top[c];
        d_top[t][c] += gr * w[c];
      }
    }
  };

  for (std::size_t t = 0; t < T; ++t) {
    recurrent_step(model, features[t], hidden);
    acts[t] = hidden;
    const auto& top = hidden.back();
    std::fill(state_target.begin(), state_target.end(), 0.0);
    state_target[static_cast<std::size_t>(targets[t].state)] = 1.0;
    accumulate_head(model.state_head(), top, state_target, cfg.state_loss_weight, t);
    if (targets[t].step_progress) {
      accumulate_head(model.step_head(), top, *targets[t].step_progress, cfg.step_loss_weight, t);
    }
    if (targets[t].substep_progress) {
      accumulate_head(model.substep_head(), top, *targets[t].substep_progress,
                      cfg.substep_loss_weight, t);
    }
  }
  out.frames = T;
  out.final_hidden = hidden;

  // Backpropagation through time, top layer first within each frame.
  HiddenState carry(L, std::vector<double>(H, 0.0));
  std::vector<double> dh(H);
  std::vector<double> da(H);
  std::vector<double> d_below;
  for (std::size_t t = T; t-- > 0;) {
    std::vector<double> from_above = d_top[t];
    for (std::size_t l = L; l-- > 0;) {
      const auto& layer = model.layers()[l];
      const auto& h_now = acts[t][l];
      const auto& h_prev = t > 0 ? acts[t - 1][l] : initial[l];
      const auto& x = l == 0 ? features[t] : acts[t][l - 1];
      const std::size_t in_dim = layer.input.cols;
      for (std::size_t r = 0; r < H; ++r) {
        dh[r] = from_above[r] + carry[l][r];
        da[r] = dh[r] * (1.0 - h_now[r] * h_now[r]);
      }
      d_below.assign(in_dim, 0.0);
      std::fill(carry[l].begin(), carry[l].end(), 0.0);
      const double* wx = p + layer.input.offset;
      const double* wh = p + layer.recurrent.offset;
      double* gwx = g + layer.input.offset;
      double* gwh = g + layer.recurrent.offset;
      double* gb = g + layer.bias.offset;
      for (std::size_t r = 0; r < H; ++r) {
        const double a = da[r];
        if (a == 0.0) continue;
        gb[r] += a;
        for (std::size_t c = 0; c < in_dim; ++c) {
          gwx[r * in_dim + c] += a * x[c];
          d_below[c] += a * wx[r * in_dim + c];
        }
        for (std::size_t c = 0; c < H; ++c) {
          gwh[r * H + c] += a * h_prev[c];
          carry[l][c] += a * wh[r * H + c];
        }
      }
      from_above = d_below;
    }
  }
  return out;
}

TrainResult train_scorer(const std::vector<TrainingVideo>& data, const ScorerConfig& cfg,
                         std::uint64_t seed) {
  cfg.validate();
  if (data.empty()) throw DataError("training set is empty");

  std::vector<std::vector<FrameTarget>> targets;
  targets.reserve(data.size());
  for (const auto& video : data) {
    if (video.features.timestamps.size() != video.features.rows.size()) {
      throw DataError("feature timestamps and rows differ in length");
    }
    for (const auto& row : video.features.rows) {
      if (row.size() != cfg.feature_dim) {
        throw DataError("feature dimension mismatch in video " + video.annotations.video_id);
      }
    }
    targets.push_back(build_targets(video.annotations, video.features.timestamps, cfg.histogram));
  }

  TrainResult result{ScorerModel::random(cfg, seed), {}};
  ScorerModel& model = result.model;
  Rng shuffle_rng(derive_seed(seed, 1));

  const std::size_t n_params = model.parameter_count();
  std::vector<double> m(n_params, 0.0);
  std::vector<double> v(n_params, 0.0);
  std::vector<double> grad(n_params);
  std::uint64_t step = 0;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    std::size_t epoch_frames = 0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      std::vector<HiddenState> hidden(b1 - b0, zero_hidden(model));
      std::size_t longest = 0;
      for (std::size_t k = b0; k < b1; ++k) longest = std::max(longest, data[order[k]].features.size());

      for (std::size_t w0 = 0; w0 < longest; w0 += cfg.bptt_window) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::size_t frames = 0;
        for (std::size_t k = b0; k < b1; ++k) {
          const std::size_t vid = order[k];
          const auto& rows = data[vid].features.rows;
          if (w0 >= rows.size()) continue;
          const std::size_t w1 = std::min(rows.size(), w0 + cfg.bptt_window);
          auto wl = window_loss(model, std::span(rows).subspan(w0, w1 - w0),
                                std::span(targets[vid]).subspan(w0, w1 - w0), hidden[k - b0]);
          for (std::size_t i = 0; i < n_params; ++i) grad[i] += wl.grad[i];
          frames += wl.frames;
          epoch_loss += wl.loss;
          hidden[k - b0] = std::move(wl.final_hidden);
        }
        if (frames == 0) continue;

        ++step;
        const double inv = 1.0 / static_cast<double>(frames);
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        auto params = model.parameters();
        for (std::size_t i = 0; i < n_params; ++i) {
          const double gi = grad[i] * inv;
          m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
          v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
          const double m_hat = m[i] / bc1;
          const double v_hat = v[i] / bc2;
          params[i] -= cfg.learning_rate *
                       (m_hat / (std::sqrt(v_hat) + cfg.epsilon) + cfg.weight_decay * params[i]);
        }
        epoch_frames += frames;
      }
    }
    result.loss_trace.push_back(epoch_frames ? epoch_loss / static_cast<double>(epoch_frames) : 0.0);
  }
  return result;
}

std::vector<FrameScores> infer_scores(const ScorerModel& model, const FeatureSequence& features) {
  if (features.timestamps.size() != features.rows.size()) {
    throw DataError("feature timestamps and rows differ in length");
  }
  check_features(model, features.rows);
  HiddenState hidden = zero_hidden(model);
  std::vector<FrameScores> out;
  out.reserve(features.size());
  for (std::size_t t = 0; t < features.size(); ++t) {
    recurrent_step(model, features.rows[t], hidden);
    const auto& top = hidden.back();
    FrameScores fs;
    fs.timestamp = features.timestamps[t];
    const auto state = softmax(head_logits(model, model.state_head(), top));
    std::copy(state.begin(), state.end(), fs.state_probs.begin());
    fs.step_progress = softmax(head_logits(model, model.step_head(), top));
    fs.substep_progress = softmax(head_logits(model, model.substep_head(), top));
    out.push_back(std::move(fs));
  }
  return out;
}

}  // namespace hstream
