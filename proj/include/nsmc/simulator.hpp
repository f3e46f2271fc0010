#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsmc/expr.hpp"
#include "nsmc/model.hpp"
#include "nsmc/monitor.hpp"
#include "nsmc/query.hpp"
#include "nsmc/rng.hpp"

namespace nsmc {

/// One point of a run.
struct SimState {
  std::vector<int> locs;
  std::vector<double> vars;
  std::vector<double> clocks;
  std::vector<double> growth;  // integral of each clock's rate, never reset
  double time = 0.0;
  long steps = 0;

  Valuation valuation() const { return {vars, clocks, locs}; }
};

/// A process's sampled intention, kept across steps while nothing it depends on changes.
struct PendingChoice {
  bool valid = false;
  double fire_time = kInfinity;  // absolute
  double deadline = kInfinity;   // absolute time at which the invariant runs out
  int edge = -1;
};

enum class Termination { Verdict, Bound, Quiescent, Deadlock };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Verdict: return "verdict";
    case Termination::Bound: return "bound";
    case Termination::Quiescent: return "quiescent";
    case Termination::Deadlock: return "deadlock";
  }
  return "?";
}

struct RunResult {
  Termination cause = Termination::Bound;
  bool satisfied = false;  // monitor verdict, if a monitor was attached
  double time = 0.0;
  long steps = 0;
  std::uint64_t resamples = 0;
};

/// Receives every committed point of a run: the initial state, the state at
/// the end of each delay and the state after each transition.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_point(const SimState& s, ObsKind kind, std::string_view label) = 0;
};

/// Records full snapshots; intended for tests and debugging.
class TraceRecorder : public RunObserver {
 public:
  struct Point {
    double time;
    ObsKind kind;
    std::string label;
    std::vector<int> locs;
    std::vector<double> vars;
    std::vector<double> clocks;
  };

  void on_point(const SimState& s, ObsKind kind, std::string_view label) override {
    points.push_back({s.time, kind, std::string(label), s.locs, s.vars, s.clocks});
  }

  std::vector<Point> points;
};

/// Snapshot of one monitor observation; lets tests replay exactly what the monitor saw.
struct RecordedObservation {
  ObsKind kind;
  double time;
  std::vector<int> locs;
  std::vector<double> vars;
  std::vector<double> clocks;
  std::vector<double> growth;

  Observation view() const { return {kind, {vars, clocks, locs}, growth}; }
};

class Simulator {
 public:
  explicit Simulator(const Network& net)
      : net_(net), deps_(analyze_dependencies(net)), pending_(net.automata.size()) {}

  void set_reuse(bool on) { reuse_ = on; }
  bool reuse() const { return reuse_; }

  /// When set, every monitor observation is appended here.
  void record_observations(std::vector<RecordedObservation>* out) { record_ = out; }

  const DependencyMatrix& dependencies() const { return deps_; }

  SimState initial_state() const {
    SimState s;
    s.locs.reserve(net_.automata.size());
    for (const auto& a : net_.automata) s.locs.push_back(a.initial);
    for (const auto& v : net_.vars) s.vars.push_back(v.initial);
    for (const auto& c : net_.clocks) s.clocks.push_back(c.initial);
    s.growth.assign(net_.clocks.size(), 0.0);
    return s;
  }

  /// Current rate of every clock (1 unless the owning process's location says otherwise).
  void compute_rates(const SimState& s, std::vector<double>& rates) const {
    rates.assign(net_.clocks.size(), 1.0);
    const auto v = s.valuation();
    for (std::size_t p = 0; p < net_.automata.size(); ++p) {
      const auto& loc = net_.automata[p].locations[static_cast<std::size_t>(s.locs[p])];
      for (const auto& [clk, r] : loc.rates) rates[static_cast<std::size_t>(clk)] = eval(r, v);
    }
  }

  /// Supremum of the delay keeping process `p`'s invariant true.
  double invariant_horizon(const SimState& s, int p, std::span<const double> rates) const {
    const auto& loc = location(s, p);
    if (!loc.invariant) return kInfinity;
    auto set = timeset(loc.invariant, s.valuation(), rates);
    if (!set) throw EvalError("non-linear clock constraint in invariant of " + name(p));
    for (const auto& part : set->parts())
      if (part.lo <= kTimeEpsilon) return part.hi;
    return 0.0;
  }

  /// Delays after which some output/internal edge of `p` can fire, within the invariant.
  TimeSet enabled_delays(const SimState& s, int p, std::span<const double> rates, double hi) const {
    TimeSet all;
    const auto& a = net_.automata[static_cast<std::size_t>(p)];
    for (int ei : a.active_edges[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(p)])]) {
      if (edge_weight(a.edges[static_cast<std::size_t>(ei)], s) <= 0.0) continue;
      all = all.unite(guard_set(s, p, ei, rates).clip(hi));
    }
    return all;
  }

  /// Earliest and latest delay of `p`'s next action: [lo, hi].
  Interval delay_interval(const SimState& s, int p) const {
    std::vector<double> rates;
    compute_rates(s, rates);
    const double hi = invariant_horizon(s, p, rates);
    return {enabled_delays(s, p, rates, hi).infimum(), hi};
  }

  /// Runs until the monitor decides, the bound is reached, or nothing can happen.
  RunResult run(const RunBound& bound, Monitor* monitor, Rng& rng, RunObserver* observer = nullptr) {
    SimState s = initial_state();
    return run_from(s, bound, monitor, rng, observer);
  }

  RunResult run_from(SimState& s, const RunBound& bound, Monitor* monitor, Rng& rng,
                     RunObserver* observer = nullptr) {
    RunResult res;
    for (auto& p : pending_) p = PendingChoice{};
    compute_rates(s, rates_);
    const int bound_clock = bound.kind == BoundKind::Cost ? bound.clock_slot : net_.tau;
    if (monitor) monitor->reset();
    if (observer) observer->on_point(s, ObsKind::Initial, "");
    if (monitor && observe(*monitor, s, ObsKind::Initial) != Verdict::Unknown)
      return finish(res, s, Termination::Verdict, monitor);

    for (;;) {
      if (bound.kind == BoundKind::Steps && s.steps >= static_cast<long>(bound.limit))
        return finish(res, s, Termination::Bound, monitor);
      if (bound.kind != BoundKind::Steps &&
          s.clocks[static_cast<std::size_t>(bound_clock)] > bound.limit)
        return finish(res, s, Termination::Bound, monitor);

      for (std::size_t p = 0; p < pending_.size(); ++p)
        if (!pending_[p].valid) {
          sample(s, static_cast<int>(p), rng);
          ++res.resamples;
        }

      // the earliest action, ties broken uniformly
      double fire = kInfinity;
      double deadline = kInfinity;
      winners_.clear();
      for (std::size_t p = 0; p < pending_.size(); ++p) {
        deadline = std::min(deadline, pending_[p].deadline);
        const double t = pending_[p].fire_time;
        if (t < fire) {
          fire = t;
          winners_.assign(1, static_cast<int>(p));
        } else if (t == fire && std::isfinite(t)) {
          winners_.push_back(static_cast<int>(p));
        }
      }

      double limit = kInfinity;  // absolute time at which the bound is hit
      if (bound.kind != BoundKind::Steps) {
        const double c = s.clocks[static_cast<std::size_t>(bound_clock)];
        const double r = rates_[static_cast<std::size_t>(bound_clock)];
        if (r > 0.0) limit = s.time + (bound.limit - c) / r;
      }

      if (fire <= deadline && fire <= limit && std::isfinite(fire)) {
        if (!advance(s, fire - s.time, monitor, observer, true))
          return finish(res, s, Termination::Verdict, monitor);
        const int w = winners_[winners_.size() == 1 ? 0 : rng.index(winners_.size())];
        if (fire_edge(s, w, rng, observer) && monitor && observe(*monitor, s, ObsKind::Transition) != Verdict::Unknown)
          return finish(res, s, Termination::Verdict, monitor);
        continue;
      }
      if (std::isfinite(deadline) && deadline < limit) {
        if (!advance(s, deadline - s.time, monitor, observer, true))
          return finish(res, s, Termination::Verdict, monitor);
        return finish(res, s, Termination::Deadlock, monitor);
      }
      // Nothing fires before the bound.
      const bool quiescent = !std::isfinite(fire) && !std::isfinite(deadline);
      if (quiescent && (!std::isfinite(limit) || (monitor && !monitor->time_sensitive() && !observer)))
        return finish(res, s, Termination::Quiescent, monitor);
      if (!std::isfinite(limit)) return finish(res, s, Termination::Quiescent, monitor);
      if (!advance(s, limit - s.time, monitor, observer, true))
        return finish(res, s, Termination::Verdict, monitor);
      if (bound.kind == BoundKind::Cost) s.clocks[static_cast<std::size_t>(bound_clock)] = bound.limit;
      return finish(res, s, Termination::Bound, monitor);
    }
  }

  const PendingChoice& pending(int p) const { return pending_[static_cast<std::size_t>(p)]; }

 private:
  const Location& location(const SimState& s, int p) const {
    return net_.automata[static_cast<std::size_t>(p)]
        .locations[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(p)])];
  }

  const std::string& name(int p) const { return net_.automata[static_cast<std::size_t>(p)].name; }

  static double branch_weight(const Branch& b, const Valuation& v) {
    if (!b.weight) return 1.0;
    const double w = eval(b.weight, v);
    if (w < 0.0) throw EvalError("negative branch weight");
    return w;
  }

  static double edge_weight(const Edge& e, const SimState& s) {
    double w = 0.0;
    const auto v = s.valuation();
    for (const auto& b : e.branches) w += branch_weight(b, v);
    return w;
  }

  TimeSet guard_set(const SimState& s, int p, int ei, std::span<const double> rates) const {
    const auto& e = net_.automata[static_cast<std::size_t>(p)].edges[static_cast<std::size_t>(ei)];
    auto set = timeset(e.guard, s.valuation(), rates);
    if (!set) throw EvalError("non-linear clock constraint in guard of " + name(p));
    return *set;
  }

  void sample(const SimState& s, int p, Rng& rng) {
    auto& pc = pending_[static_cast<std::size_t>(p)];
    pc = PendingChoice{};
    pc.valid = true;
    const double hi = invariant_horizon(s, p, rates_);
    if (std::isfinite(hi)) pc.deadline = s.time + hi;

    const auto& a = net_.automata[static_cast<std::size_t>(p)];
    const auto& edges = a.active_edges[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(p)])];
    if (edges.empty()) return;
    sets_.clear();
    weights_.clear();
    TimeSet enabled;
    for (int ei : edges) {
      const double w = edge_weight(a.edges[static_cast<std::size_t>(ei)], s);
      sets_.push_back(w > 0.0 ? guard_set(s, p, ei, rates_).clip(hi) : TimeSet::none());
      weights_.push_back(w);
      enabled = enabled.unite(sets_.back());
    }
    if (enabled.empty()) return;

    double d;
    const double measure = enabled.measure();
    if (std::isfinite(hi)) {
      d = enabled.locate(rng.uniform() * measure);
    } else {
      const auto& loc = location(s, p);
      if (!loc.exp_rate)
        throw EvalError("unbounded delay without exponential rate in " + name(p) + "." + loc.name);
      const double lambda = eval(loc.exp_rate, s.valuation());
      if (lambda < 0.0) throw EvalError("negative exponential rate in " + name(p));
      if (lambda == 0.0) return;
      if (measure == 0.0) {
        d = enabled.infimum();
      } else {
        const double mass = rng.exponential(lambda);
        if (mass > measure) return;
        d = enabled.locate(mass);
      }
    }

    for (std::size_t i = 0; i < sets_.size(); ++i)
      if (!sets_[i].contains(d, kTimeEpsilon)) weights_[i] = 0.0;
    const int k = rng.weighted(weights_);
    if (k < 0) return;
    pc.edge = edges[static_cast<std::size_t>(k)];
    pc.fire_time = s.time + d;
  }

  void move(SimState& s, double d) {
    if (d <= 0.0) return;
    for (std::size_t c = 0; c < s.clocks.size(); ++c) {
      s.clocks[c] += rates_[c] * d;
      s.growth[c] += rates_[c] * d;
    }
    s.time += d;
  }

  Verdict observe(Monitor& m, const SimState& s, ObsKind kind) {
    if (record_)
      record_->push_back({kind, s.time, s.locs, s.vars, s.clocks, s.growth});
    return m.observe({kind, s.valuation(), s.growth});
  }

  // Lets `d` time units pass, showing the monitor every point at which its
  // residual might change truth value. Returns false once a verdict is reached.
  bool advance(SimState& s, double d, Monitor* monitor, RunObserver* observer, bool end_point) {
    const double target = s.time + d;
    double left = d;
    while (left > 0.0) {
      if (!monitor || !monitor->time_sensitive()) {
        move(s, left);
        break;
      }
      monitor->watch_points(s.valuation(), rates_, s.growth, left, watch_);
      const double p = watch_.empty() ? left : watch_.front();
      const double half = p / 2;
      move(s, half);
      left = target - s.time;
      if (observe(*monitor, s, ObsKind::Interval) != Verdict::Unknown) return false;
      if (!monitor->time_sensitive()) continue;
      monitor->watch_points(s.valuation(), rates_, s.growth, left, watch_);
      const double q = watch_.empty() ? left : std::min(watch_.front(), left);
      const bool last = q >= left;
      move(s, last ? left : q);
      if (last) s.time = target;
      left = last ? 0.0 : target - s.time;
      if (observe(*monitor, s, last ? ObsKind::DelayEnd : ObsKind::Point) != Verdict::Unknown)
        return false;
    }
    s.time = std::max(s.time, target);
    if (end_point && observer && d > 0.0) observer->on_point(s, ObsKind::DelayEnd, "");
    return true;
  }

  struct Firing {
    int process;
    int edge;
    int branch;
  };

  int choose_branch(const Edge& e, const Valuation& v, Rng& rng) {
    weights_.clear();
    for (const auto& b : e.branches) weights_.push_back(branch_weight(b, v));
    return e.branches.size() == 1 && weights_[0] > 0.0 ? 0 : rng.weighted(weights_);
  }

  bool fire_edge(SimState& s, int w, Rng& rng, RunObserver* observer) {
    const auto& a = net_.automata[static_cast<std::size_t>(w)];
    const int ei = pending_[static_cast<std::size_t>(w)].edge;
    const auto& e = a.edges[static_cast<std::size_t>(ei)];
    const auto pre = s.valuation();

    firings_.clear();
    const int br = choose_branch(e, pre, rng);
    if (br < 0) {
      pending_[static_cast<std::size_t>(w)].valid = false;
      return false;
    }
    firings_.push_back({w, ei, br});

    if (e.sync == SyncKind::Output) {
      for (std::size_t q = 0; q < net_.automata.size(); ++q) {
        if (static_cast<int>(q) == w) continue;
        const auto& b = net_.automata[q];
        const auto& inputs = b.input_edges[static_cast<std::size_t>(s.locs[q])];
        if (inputs.empty()) continue;
        candidates_.clear();
        weights_.clear();
        for (int fi : inputs) {
          const auto& f = b.edges[static_cast<std::size_t>(fi)];
          if (f.channel != e.channel || !holds(f.guard, pre)) continue;
          double wsum = 0.0;
          for (const auto& fb : f.branches) wsum += branch_weight(fb, pre);
          if (wsum <= 0.0) continue;
          candidates_.push_back(fi);
          weights_.push_back(wsum);
        }
        if (candidates_.empty()) continue;
        const int k = candidates_.size() == 1 ? 0 : rng.weighted(weights_);
        const int fi = candidates_[static_cast<std::size_t>(k)];
        const int fb = choose_branch(b.edges[static_cast<std::size_t>(fi)], pre, rng);
        if (fb >= 0) firings_.push_back({static_cast<int>(q), fi, fb});
      }
    }

    for (const auto& f : firings_) {
      const auto& edge = net_.automata[static_cast<std::size_t>(f.process)]
                             .edges[static_cast<std::size_t>(f.edge)];
      const auto& b = edge.branches[static_cast<std::size_t>(f.branch)];
      for (const auto& u : b.updates) {
        double v = eval(u.value, s.valuation());
        if (u.to_clock) {
          s.clocks[static_cast<std::size_t>(u.slot)] = v;
        } else {
          if (u.type == ValueType::Bool) v = v != 0.0 ? 1.0 : 0.0;
          s.vars[static_cast<std::size_t>(u.slot)] = v;
        }
      }
      s.locs[static_cast<std::size_t>(f.process)] = b.target;
    }
    ++s.steps;
    compute_rates(s, rates_);

    if (!reuse_) {
      for (auto& p : pending_) p.valid = false;
    } else {
      for (const auto& f : firings_)
        for (int q : deps_.affected(f.process, f.edge)) pending_[static_cast<std::size_t>(q)].valid = false;
    }

    if (observer) {
      label_ = a.name + ":" + a.locations[static_cast<std::size_t>(e.source)].name + "->" +
               a.locations[static_cast<std::size_t>(e.branches[static_cast<std::size_t>(br)].target)].name;
      if (e.channel >= 0) label_ += " " + net_.channels[static_cast<std::size_t>(e.channel)] + "!";
      observer->on_point(s, ObsKind::Transition, label_);
    }
    return true;
  }

  RunResult& finish(RunResult& r, const SimState& s, Termination cause, Monitor* monitor) {
    r.cause = cause;
    r.time = s.time;
    r.steps = s.steps;
    if (monitor) r.satisfied = monitor->finish();
    return r;
  }

  const Network& net_;
  DependencyMatrix deps_;
  bool reuse_ = true;
  std::vector<PendingChoice> pending_;
  std::vector<double> rates_;
  std::vector<int> winners_;
  std::vector<TimeSet> sets_;
  std::vector<double> weights_;
  std::vector<int> candidates_;
  std::vector<Firing> firings_;
  std::vector<double> watch_;
  std::string label_;
  std::vector<RecordedObservation>* record_ = nullptr;
};

}  // namespace nsmc
