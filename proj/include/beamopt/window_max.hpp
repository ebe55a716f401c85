#pragma once

// Time sampling of a point's temperature over a window of segments, and the
// exact / smoothed maxima built on it. Templated on the temperature
// callable so that cached evaluators can reuse the same sampling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "beamopt/geometry.hpp"
#include "beamopt/scan_path.hpp"

namespace beamopt {

struct SampleGrid {
  std::vector<double> times;             // ascending, times.front() = t_p^i
  std::vector<double> interval_measure;  // scanning distance covered in [times[i], times[i+1]] (m)
  std::vector<Point3> beam;              // beam centre at each node
  std::vector<char> anchor;              // node is a segment boundary (never pruned)
};

// Nodes at t_p^i and m_k equally spaced times per segment ending at t_k^f,
// with m_k = ceil(L_k / advance).
SampleGrid make_sample_grid(const ScanPath& path, const ScanTiming& timing, std::size_t first, std::size_t last,
                            double advance);

// Golden-section search for the maximum of f on [a, b]; returns the best
// value seen, seeded with `seed`.
template <class Fn>
double golden_maximum(Fn&& f, double a, double b, double seed, double tolerance) {
  constexpr double kInvPhi = 0.6180339887498949;
  double best = seed;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 60; ++it) {
    best = std::max({best, fc, fd});
    if (it >= 4 && std::abs(fc - fd) < tolerance) break;
    if (b - a <= 1e-15 * (1.0 + std::abs(b))) break;
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return best;
}

// Max of u over the grid nodes, refined by golden section around the best
// node. Nodes whose beam position lies farther than near_radius (in plane)
// from x are skipped unless they are anchors.
template <class TempFn>
double exact_window_max(TempFn&& u, const SampleGrid& grid, const Point3& x, double near_radius,
                        double golden_tolerance) {
  const std::size_t n = grid.times.size();
  const double r2 = near_radius * near_radius;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (near_radius > 0.0 && !grid.anchor[i]) {
      const double dx = grid.beam[i].x - x.x;
      const double dy = grid.beam[i].y - x.y;
      if (dx * dx + dy * dy > r2) continue;
    }
    const double value = u(grid.times[i]);
    if (value > best) {
      best = value;
      best_i = i;
    }
  }
  if (n < 2) return best;
  const double a = grid.times[best_i == 0 ? 0 : best_i - 1];
  const double b = grid.times[std::min(best_i + 1, n - 1)];
  if (!(b > a)) return best;
  return golden_maximum(u, a, b, best, golden_tolerance);
}

// (1/K) log( \int exp(K u) d(gamma) / reference_length ) by the trapezoid
// rule on the grid, with intervals near the peak subdivided. Intervals whose
// endpoints both sit more than 30/K below the coarse maximum are not
// subdivided; their weight is below e^-30.
template <class TempFn>
double smoothed_window_max(TempFn&& u, const SampleGrid& grid, double smoothing, double reference_length,
                           unsigned subdivisions) {
  const std::size_t n = grid.times.size();
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = u(grid.times[i]);
  const double shift = *std::max_element(values.begin(), values.end());
  if (n < 2) return shift;
  const double threshold = shift - 30.0 / smoothing;
  const unsigned sub = std::max(1u, subdivisions);
  auto kernel = [&](double value) { return std::exp(smoothing * (value - shift)); };

  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double measure = grid.interval_measure[i] / reference_length;
    if (measure <= 0.0) continue;
    if (sub == 1 || std::max(values[i], values[i + 1]) < threshold) {
      sum += 0.5 * measure * (kernel(values[i]) + kernel(values[i + 1]));
      continue;
    }
    const double h = measure / sub;
    double acc = 0.5 * (kernel(values[i]) + kernel(values[i + 1]));
    for (unsigned j = 1; j < sub; ++j) {
      const double t = grid.times[i] + (grid.times[i + 1] - grid.times[i]) * (static_cast<double>(j) / sub);
      acc += kernel(u(t));
    }
    sum += h * acc;
  }
  return shift + std::log(sum) / smoothing;
}

}  // namespace beamopt
