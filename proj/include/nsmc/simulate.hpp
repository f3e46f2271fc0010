#pragma once

#include <string>
#include <vector>

#include "nsmc/output.hpp"
#include "nsmc/query.hpp"
#include "nsmc/rng.hpp"
#include "nsmc/simulator.hpp"

namespace nsmc {

namespace detail {

class SeriesObserver : public RunObserver {
 public:
  SeriesObserver(const std::vector<Expr>& exprs, std::vector<TrajectorySeries>& out, int resolution,
                 double t_end)
      : exprs_(exprs), out_(out) {
    for (std::size_t i = 0; i < exprs.size(); ++i) filters_.emplace_back(resolution, 0.0, t_end);
  }

  void on_point(const SimState& s, ObsKind, std::string_view) override {
    const auto v = s.valuation();
    for (std::size_t i = 0; i < exprs_.size(); ++i) filters_[i].push(s.time, eval(exprs_[i], v), out_[i].points);
  }

  void finish() {
    for (std::size_t i = 0; i < exprs_.size(); ++i) filters_[i].finish(out_[i].points);
  }

 private:
  const std::vector<Expr>& exprs_;
  std::vector<TrajectorySeries>& out_;
  std::vector<TrajectoryFilter> filters_;
};

class EndTime : public RunObserver {
 public:
  void on_point(const SimState& s, ObsKind, std::string_view) override { end = s.time; }
  double end = 0.0;
};

}  // namespace detail

/// Runs a resolved simulate query and returns one filtered series per run and
/// expression. Each run is simulated twice with the same seed: once to learn
/// its duration, which fixes the filter's time cells, and once to record.
inline std::vector<TrajectorySeries> simulate_trajectories(const Network& net, const Query& q, std::uint64_t seed,
                                                           int resolution, bool reuse = true) {
  if (q.kind != QueryKind::Simulate) throw std::invalid_argument("not a simulate query");
  Simulator sim(net);
  sim.set_reuse(reuse);
  std::vector<TrajectorySeries> all;
  for (int run = 0; run < q.runs; ++run) {
    const auto rs = run_seed(seed, static_cast<std::uint64_t>(run));
    detail::EndTime end;
    {
      Rng rng(rs);
      sim.run(q.bound, nullptr, rng, &end);
    }
    std::vector<TrajectorySeries> series(q.exprs.size());
    for (std::size_t i = 0; i < q.exprs.size(); ++i) {
      series[i].expr = to_string(q.exprs[i]);
      series[i].run = run;
      series[i].resolution = resolution;
      series[i].t_begin = 0.0;
      series[i].t_end = end.end;
    }
    detail::SeriesObserver obs(q.exprs, series, resolution, end.end);
    Rng rng(rs);
    sim.run(q.bound, nullptr, rng, &obs);
    obs.finish();
    for (auto& s : series) all.push_back(std::move(s));
  }
  return all;
}

}  // namespace nsmc
