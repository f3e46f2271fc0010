#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nsmc/output.hpp"

namespace nsmc::testing {

// Largest distance, in cells of the R x R grid spanned by the raw series,
// from a raw point to the polyline through the filtered points. Distance is
// measured per axis (Chebyshev) in cell units.
inline double max_cell_deviation(std::span<const TrajectoryPoint> raw, std::span<const TrajectoryPoint> kept,
                                 int resolution) {
  if (raw.empty()) return 0.0;
  double vlo = raw[0].v, vhi = raw[0].v;
  for (const auto& p : raw) {
    vlo = std::min(vlo, p.v);
    vhi = std::max(vhi, p.v);
  }
  const double cw = std::max((raw.back().t - raw.front().t) / resolution, 1e-300);
  const double ch = std::max((vhi - vlo) / resolution, 1e-300);

  // distance from p to segment a-b in cell units, minimised over the segment
  auto seg_dist = [&](const TrajectoryPoint& p, const TrajectoryPoint& a, const TrajectoryPoint& b) {
    const double ax = (a.t - p.t) / cw, ay = (a.v - p.v) / ch;
    const double bx = (b.t - p.t) / cw, by = (b.v - p.v) / ch;
    auto f = [&](double s) {
      return std::max(std::abs(ax + s * (bx - ax)), std::abs(ay + s * (by - ay)));
    };
    // f is convex and piecewise linear in s; its minimum is at an end or where
    // a coordinate vanishes or the two coordinates have equal magnitude
    double best = std::min(f(0.0), f(1.0));
    auto root = [&](double c0, double c1) {
      if (c1 != c0) {
        const double s = c0 / (c0 - c1);
        if (s > 0.0 && s < 1.0) best = std::min(best, f(s));
      }
    };
    root(ax, bx);
    root(ay, by);
    root(ax - ay, bx - by);
    root(ax + ay, bx + by);
    return best;
  };

  double worst = 0.0;
  std::size_t j = 0;
  for (const auto& p : raw) {
    while (j + 1 < kept.size() && kept[j + 1].t < p.t - cw) ++j;
    double best = std::max(std::abs(kept[j].t - p.t) / cw, std::abs(kept[j].v - p.v) / ch);
    for (std::size_t k = j; k + 1 < kept.size() && kept[k].t <= p.t + cw; ++k)
      best = std::min(best, seg_dist(p, kept[k], kept[k + 1]));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace nsmc::testing
