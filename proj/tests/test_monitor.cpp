#include <gtest/gtest.h>

#include <optional>
#include <random>

#include "nsmc/monitor.hpp"
#include "nsmc/output.hpp"
#include "nsmc/parser.hpp"
#include "nsmc/simulator.hpp"

#include "monitor_oracle.hpp"

using namespace nsmc;
using namespace nsmc::testing;

namespace {

Network corpus(const std::string& name) {
  return build_network(parse_model(read_file(std::string(NSMC_MODELS_DIR) + "/" + name)));
}

Expr formula_expr(const Network& net, const std::string& text) {
  return resolve_in_network(parse_expression(text, true), net);
}

RunBound time_bound(double m) {
  RunBound b;
  b.kind = BoundKind::Time;
  b.limit = m;
  return b;
}

}  // namespace

TEST(Progression, BoundedEventuallyFailsAfterDeadline) {
  auto net = corpus("race.npta");
  Monitor m(wmtl::from_expr(formula_expr(net, "<>[tau<=1] T.T3"), net.tau));
  std::vector<double> vars(net.vars.size()), clocks(net.clocks.size()), growth(net.clocks.size());
  std::vector<int> locs{0, 0, 0};
  EXPECT_EQ(m.observe({ObsKind::Initial, {vars, clocks, locs}, growth}), Verdict::Unknown);
  growth[static_cast<std::size_t>(net.tau)] = 1.0;
  EXPECT_EQ(m.observe({ObsKind::Point, {vars, clocks, locs}, growth}), Verdict::Unknown);
  growth[static_cast<std::size_t>(net.tau)] = 1.5;
  EXPECT_EQ(m.observe({ObsKind::Point, {vars, clocks, locs}, growth}), Verdict::False);
}

TEST(Progression, GloballyFailsOnFirstViolation) {
  auto net = corpus("race.npta");
  Monitor m(wmtl::from_expr(formula_expr(net, "[] !T.T3"), net.tau));
  std::vector<double> vars(net.vars.size()), clocks(net.clocks.size()), growth(net.clocks.size());
  std::vector<int> locs{0, 0, 0};
  EXPECT_EQ(m.observe({ObsKind::Initial, {vars, clocks, locs}, growth}), Verdict::Unknown);
  locs[2] = net.automata[2].find_location("T3");
  EXPECT_EQ(m.observe({ObsKind::Transition, {vars, clocks, locs}, growth}), Verdict::False);
}

TEST(Progression, UnresolvedObligationsFailAtTheEnd) {
  auto net = corpus("race.npta");
  std::vector<double> vars(net.vars.size()), clocks(net.clocks.size()), growth(net.clocks.size());
  std::vector<int> locs{0, 0, 0};
  Monitor ev(wmtl::from_expr(formula_expr(net, "<> T.T3"), net.tau));
  ev.observe({ObsKind::Initial, {vars, clocks, locs}, growth});
  EXPECT_FALSE(ev.finish());
  Monitor gl(wmtl::from_expr(formula_expr(net, "[] !T.T3"), net.tau));
  gl.observe({ObsKind::Initial, {vars, clocks, locs}, growth});
  EXPECT_TRUE(gl.finish());
}

TEST(Progression, NextLooksAtTheFollowingTransition) {
  auto net = corpus("race.npta");
  Monitor m(wmtl::from_expr(formula_expr(net, "next T.T1"), net.tau));
  std::vector<double> vars(net.vars.size()), clocks(net.clocks.size()), growth(net.clocks.size());
  std::vector<int> locs{0, 0, 0};
  EXPECT_EQ(m.observe({ObsKind::Initial, {vars, clocks, locs}, growth}), Verdict::Unknown);
  EXPECT_EQ(m.observe({ObsKind::DelayEnd, {vars, clocks, locs}, growth}), Verdict::Unknown);
  locs[2] = net.automata[2].find_location("T1");
  EXPECT_EQ(m.observe({ObsKind::Transition, {vars, clocks, locs}, growth}), Verdict::True);
}

TEST(Progression, WatchPointsCoverClockCrossingsAndDeadlines) {
  auto net = corpus("race.npta");
  Monitor m(wmtl::from_expr(formula_expr(net, "<>[C<=6] (A.x >= 0.5)"), net.tau));
  std::vector<double> vars(net.vars.size()), clocks(net.clocks.size()), growth(net.clocks.size());
  std::vector<int> locs{0, 0, 0};
  m.observe({ObsKind::Initial, {vars, clocks, locs}, growth});
  std::vector<double> rates(net.clocks.size(), 1.0);
  rates[static_cast<std::size_t>(net.find_clock("C"))] = 4.0;
  std::vector<double> out;
  m.watch_points({vars, clocks, locs}, rates, growth, 10.0, out);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 1.5);
}

// The monitor's verdict equals the whole-run oracle on the observations it saw.
// For formulas whose temporal operands are atomic, refining those observations
// with dense interior points does not change the oracle's answer either; with
// nested bounded operators the observation points are part of the semantics.
TEST(MonitorOracle, RandomFormulasAgreeWithWholeRunSemantics) {
  auto net = corpus("race.npta");
  Simulator sim(net);
  std::vector<RecordedObservation> trace;
  sim.record_observations(&trace);
  std::mt19937_64 gen(2024);
  int runs = 0, trues = 0;
  for (int f = 0; f < 300; ++f) {
    const int depth = 1 + f % 3;
    const std::string text = random_formula(gen, depth);
    const Expr e = formula_expr(net, text);
    Monitor mon(wmtl::from_expr(e, net.tau));
    for (int r = 0; r < 20; ++r) {
      trace.clear();
      Rng rng(run_seed(static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(r)));
      const auto res = sim.run(time_bound(4), &mon, rng);
      ASSERT_FALSE(trace.empty());
      const Oracle direct(trace, net.tau);
      ASSERT_EQ(res.satisfied, direct.sat(e, 0)) << text << " run " << r;
      if (depth == 1) {
        const auto dense = refine(trace, 16);
        const Oracle refined(dense, net.tau);
        ASSERT_EQ(res.satisfied, refined.sat(e, 0)) << text << " run " << r << " (refined)";
      }
      ++runs;
      trues += res.satisfied;
    }
  }
  EXPECT_EQ(runs, 6000);
  EXPECT_GT(trues, 600);
  EXPECT_LT(trues, 5400);
}

TEST(MonitorOracle, RobotUntilAgreesWithOracle) {
  auto net = corpus("robot.npta");
  Simulator sim(net);
  std::vector<RecordedObservation> trace;
  sim.record_observations(&trace);
  for (const char* text : {"(e >= 1) U[tau<=40] R.Goal", "(e >= 5 || R.Charge) U[e<=20] R.Goal",
                           "[][tau<=30] (R.x <= 1.5 || R.Charge)", "<> (R.Charge && next next R.Goal)"}) {
    const Expr e = formula_expr(net, text);
    Monitor mon(wmtl::from_expr(e, net.tau));
    int sat = 0;
    for (int r = 0; r < 500; ++r) {
      trace.clear();
      Rng rng(run_seed(77, static_cast<std::uint64_t>(r)));
      const auto res = sim.run(time_bound(50), &mon, rng);
      ASSERT_EQ(res.satisfied, Oracle(trace, net.tau).sat(e, 0)) << text;
      sat += res.satisfied;
    }
    RecordProperty(text, sat);
  }
}

// Every clock constraint the monitor tracks keeps its truth value between
// consecutive observations inside a delay, checked at 1e-3 resolution.
TEST(MonitorOracle, WatchPointsAreComplete) {
  auto net = corpus("race.npta");
  Simulator sim(net);
  std::vector<RecordedObservation> trace;
  sim.record_observations(&trace);
  const char* atoms[] = {"A.x >= 0.37", "B.y <= 1.21", "C >= 2.5", "C - A.x <= 1.9", "A.x + B.y >= 2.2"};
  std::string x;
  for (const char* a : atoms) x += std::string(x.empty() ? "" : " || ") + "(" + a + ")";
  const Expr e = formula_expr(net, "[] ((" + x + ") || !(" + x + "))");
  std::vector<Expr> parsed;
  for (const char* a : atoms) parsed.push_back(formula_expr(net, a));
  Monitor mon(wmtl::from_expr(e, net.tau));
  long checked = 0;
  for (int r = 0; r < 200; ++r) {
    trace.clear();
    Rng rng(run_seed(31, static_cast<std::uint64_t>(r)));
    const auto res = sim.run(time_bound(4), &mon, rng);
    ASSERT_TRUE(res.satisfied);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      const auto& a = trace[i - 1];
      const auto& b = trace[i];
      if (b.kind == ObsKind::Transition || b.time <= a.time) continue;
      // truth on the open piece (a, b) is the truth just after a
      for (const auto& atom : parsed) {
        std::optional<bool> first;
        for (double t = a.time + 1e-3; t < b.time - 1e-9; t += 1e-3) {
          const double f = (t - a.time) / (b.time - a.time);
          std::vector<double> clocks(a.clocks);
          for (std::size_t c = 0; c < clocks.size(); ++c) clocks[c] += f * (b.clocks[c] - a.clocks[c]);
          const bool v = holds(atom, Valuation{b.vars, clocks, b.locs});
          if (!first) first = v;
          ASSERT_EQ(v, *first) << to_string(atom) << " between " << a.time << " and " << b.time;
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 100000);
}

// A clock atom that becomes true only strictly inside a delay is caught.
TEST(MonitorOracle, ShortWindowInsideDelay) {
  auto net = corpus("race.npta");
  Simulator sim(net);
  const Expr e = formula_expr(net, "<> (A.A0 && A.x >= 0.2 && A.x <= 0.2001)");
  Monitor mon(wmtl::from_expr(e, net.tau));
  int sat = 0;
  for (int r = 0; r < 1000; ++r) {
    Rng rng(run_seed(9, static_cast<std::uint64_t>(r)));
    sat += sim.run(time_bound(4), &mon, rng).satisfied;
  }
  // A fires uniformly in [0, 1], so the window is reached with probability 0.8
  EXPECT_NEAR(sat / 1000.0, 0.8, 0.05);
}
