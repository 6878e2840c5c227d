#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of them share code with the library.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "hstream/core_model.hpp"

namespace oracle {

// Gaussian mass per bin on [0, 1] by midpoint quadrature of the density with
// `points` evaluations in total, renormalised over [0, 1].
inline std::vector<double> quadrature_bin_masses(double mu, double sigma, std::size_t bins,
                                                 std::size_t points = 1000000) {
  std::vector<double> mass(bins, 0.0);
  const double h = 1.0 / static_cast<double>(points);
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < points; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * h;
    const double z = (x - mu) / sigma;
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(x * static_cast<double>(bins)));
    mass[bin] += norm * std::exp(-0.5 * z * z) * h;
  }
  double total = 0.0;
  for (double m : mass) total += m;
  for (double& m : mass) m /= total;
  return mass;
}

inline double centre_expectation(const std::vector<double>& dist) {
  double e = 0.0;
  const double b = static_cast<double>(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) e += dist[i] * (static_cast<double>(i) + 0.5) / b;
  return e;
}

inline double tiou(const hstream::Interval& a, const hstream::Interval& b) {
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  return uni > 0.0 ? inter / uni : 0.0;
}

struct BruteMatch {
  double total = -1.0;
  std::size_t tp = 0;
};

// Every partial matching of gt to pred; keeps the one with the largest total
// tIoU and reports how many of its pairs reach the threshold.
inline BruteMatch brute_force_match(const std::vector<hstream::Interval>& gt,
                                    const std::vector<hstream::Interval>& pred, double threshold) {
  BruteMatch best;
  std::vector<bool> used(pred.size(), false);
  std::function<void(std::size_t, double, std::size_t)> rec = [&](std::size_t g, double total,
                                                                  std::size_t tp) {
    if (g == gt.size()) {
      if (total > best.total) best = {total, tp};
      return;
    }
    rec(g + 1, total, tp);
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (used[p]) continue;
      const double v = oracle::tiou(gt[g], pred[p]);
      used[p] = true;
      rec(g + 1, total + v, tp + (v >= threshold ? 1 : 0));
      used[p] = false;
    }
  };
  rec(0, 0.0, 0);
  return best;
}

inline double brute_force_f1(const std::vector<hstream::Interval>& gt,
                             const std::vector<hstream::Interval>& pred, double threshold) {
  if (gt.empty() && pred.empty()) return 1.0;
  const auto m = brute_force_match(gt, pred, threshold);
  return 2.0 * static_cast<double>(m.tp) / static_cast<double>(gt.size() + pred.size());
}

// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracle
