#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace nsmc {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Finite union of closed intervals inside [0, +inf), sorted and disjoint.
// Strict and non-strict bounds are not distinguished (closures), which is
// exact for everything measured here: lengths, infima and suprema.
class TimeSet {
 public:
  TimeSet() = default;

  static TimeSet all() { return interval(0.0, std::numeric_limits<double>::infinity()); }
  static TimeSet none() { return TimeSet{}; }

  static TimeSet interval(double lo, double hi) {
    TimeSet s;
    lo = std::max(lo, 0.0);
    if (hi >= lo) s.parts_.push_back({lo, hi});
    return s;
  }

  bool empty() const { return parts_.empty(); }
  std::span<const Interval> parts() const { return parts_; }

  double infimum() const {
    return parts_.empty() ? std::numeric_limits<double>::infinity() : parts_.front().lo;
  }

  double measure() const {
    double m = 0.0;
    for (const auto& p : parts_) m += p.hi - p.lo;
    return m;
  }

  bool contains(double t, double tol = 0.0) const {
    for (const auto& p : parts_)
      if (t >= p.lo - tol && t <= p.hi + tol) return true;
    return false;
  }

  TimeSet unite(const TimeSet& o) const {
    std::vector<Interval> all;
    all.reserve(parts_.size() + o.parts_.size());
    std::merge(parts_.begin(), parts_.end(), o.parts_.begin(), o.parts_.end(),
               std::back_inserter(all),
               [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    TimeSet r;
    for (const auto& p : all) {
      if (!r.parts_.empty() && p.lo <= r.parts_.back().hi)
        r.parts_.back().hi = std::max(r.parts_.back().hi, p.hi);
      else
        r.parts_.push_back(p);
    }
    return r;
  }

  TimeSet intersect(const TimeSet& o) const {
    TimeSet r;
    std::size_t i = 0, j = 0;
    while (i < parts_.size() && j < o.parts_.size()) {
      const double lo = std::max(parts_[i].lo, o.parts_[j].lo);
      const double hi = std::min(parts_[i].hi, o.parts_[j].hi);
      if (lo <= hi) r.parts_.push_back({lo, hi});
      if (parts_[i].hi < o.parts_[j].hi)
        ++i;
      else
        ++j;
    }
    return r;
  }

  TimeSet complement() const {
    const double inf = std::numeric_limits<double>::infinity();
    if (parts_.empty()) return all();
    TimeSet r;
    double cursor = 0.0;
    for (const auto& p : parts_) {
      if (p.lo > cursor) r.parts_.push_back({cursor, p.lo});
      cursor = p.hi;
    }
    if (cursor < inf) r.parts_.push_back({cursor, inf});
    return r;
  }

  /// Point reached after consuming `mass` units of measure from the left.
  /// Sets of measure zero map to their first point.
  double locate(double mass) const {
    if (parts_.empty()) return std::numeric_limits<double>::infinity();
    for (const auto& p : parts_) {
      const double len = p.hi - p.lo;
      if (mass <= len) return p.lo + mass;
      mass -= len;
    }
    return parts_.back().hi;
  }

  /// Restriction to [0, bound].
  TimeSet clip(double bound) const { return intersect(interval(0.0, bound)); }

 private:
  std::vector<Interval> parts_;
};

}  // namespace nsmc
