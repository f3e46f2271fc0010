// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <boost/math/distributions/beta.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "filter_check.hpp"
#include "monitor_oracle.hpp"
#include "nsmc/output.hpp"
#include "nsmc/parser.hpp"
#include "nsmc/runner.hpp"
#include "nsmc/stat.hpp"

using namespace nsmc;

namespace {

using Clock = std::chrono::steady_clock;

Network corpus(const std::string& name) {
  return build_network(parse_model(read_file(std::string(NSMC_MODELS_DIR) + "/" + name)));
}

Query query(const Network& net, const std::string& text) { return resolve_query(parse_query(text), net); }

RunBound time_bound(double m) {
  RunBound b;
  b.kind = BoundKind::Time;
  b.limit = m;
  return b;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int n, const char* name, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  std::printf("%s %2d %-22s %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !v.pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- Clopper-Pearson oracle by bisection on binomial tails ----------------------

class TailOracle {
 public:
  explicit TailOracle(std::int64_t n) : n_(n), logc_(static_cast<std::size_t>(n) + 1) {
    for (std::int64_t j = 0; j <= n; ++j)
      logc_[static_cast<std::size_t>(j)] = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
  }

  // P(X in [from, to]) for X ~ Bin(n, p)
  double mass(std::int64_t from, std::int64_t to, double p) const {
    const double lp = std::log(p), lq = std::log1p(-p);
    double s = 0.0;
    for (std::int64_t j = from; j <= to; ++j)
      s += std::exp(logc_[static_cast<std::size_t>(j)] + j * lp + (n_ - j) * lq);
    return s;
  }

  CpInterval interval(std::int64_t k, double alpha) const {
    CpInterval ci{0.0, 1.0};
    // lower: P(X >= k | p) = alpha/2, increasing in p
    if (k > 0) ci.lo = bisect([&](double p) { return mass(k, n_, p) < alpha / 2; });
    // upper: P(X <= k | p) = alpha/2, decreasing in p
    if (k < n_) ci.hi = bisect([&](double p) { return mass(0, k, p) > alpha / 2; });
    return ci;
  }

 private:
  // smallest p where `below` turns false
  template <class F>
  static double bisect(F below) {
    double a = 0.0, b = 1.0;
    for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
      const double m = 0.5 * (a + b);
      (below(m) ? a : b) = m;
    }
    return 0.5 * (a + b);
  }

  std::int64_t n_;
  std::vector<double> logc_;
};

CpInterval beta_oracle(std::int64_t k, std::int64_t n, double alpha) {
  CpInterval ci{0.0, 1.0};
  if (k > 0) ci.lo = boost::math::quantile(boost::math::beta_distribution<>(k, n - k + 1), alpha / 2);
  if (k < n) ci.hi = boost::math::quantile(boost::math::beta_distribution<>(k + 1, n - k), 1 - alpha / 2);
  return ci;
}

}  // namespace

int main() {
  criterion(1, "race-probability", [] {
    const auto net = corpus("race.npta");
    RunParams p;
    p.epsilon = 0.01;
    p.alpha = 0.05;
    p.seed = 20260001;
    const auto t0 = Clock::now();
    const auto r = run_sequential(net, query(net, "Pr[<=10](<> T.T1)"), p);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return Outcome{r.ci.lo <= 0.75 && 0.75 <= r.ci.hi && secs < 10.0,
                   fmt("p=%.4f ci=[%.4f, %.4f] runs=%lld", r.p_hat, r.ci.lo, r.ci.hi,
                       static_cast<long long>(r.runs))};
  });

  criterion(2, "chernoff-run-counts", [] {
    const auto a = required_runs(0.05, 0.05), b = required_runs(0.1, 0.05);
    return Outcome{a == 738 && b == 185, fmt("N(0.05)=%lld N(0.1)=%lld", static_cast<long long>(a),
                                             static_cast<long long>(b))};
  });

  criterion(3, "clopper-pearson", [] {
    const auto ci = clopper_pearson(5, 10, 0.05);
    const auto ref = TailOracle(10).interval(5, 0.05);
    bool ok = std::abs(ci.lo - 0.1871) <= 1e-3 && std::abs(ci.hi - 0.8129) <= 1e-3 &&
              std::abs(ci.lo - ref.lo) <= 1e-6 && std::abs(ci.hi - ref.hi) <= 1e-6;
    std::mt19937_64 gen(31337);
    double worst_bisect = 0.0, worst_beta = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const std::int64_t n = std::uniform_int_distribution<std::int64_t>(1, 2000)(gen);
      const std::int64_t k = std::uniform_int_distribution<std::int64_t>(0, n)(gen);
      const double alpha = std::uniform_real_distribution<double>(0.005, 0.2)(gen);
      const auto got = clopper_pearson(k, n, alpha);
      const auto bis = TailOracle(n).interval(k, alpha);
      const auto bet = beta_oracle(k, n, alpha);
      worst_bisect = std::max({worst_bisect, std::abs(got.lo - bis.lo), std::abs(got.hi - bis.hi)});
      worst_beta = std::max({worst_beta, std::abs(got.lo - bet.lo), std::abs(got.hi - bet.hi)});
    }
    ok = ok && worst_bisect <= 1e-6 && worst_beta <= 1e-6;
    return Outcome{ok, fmt("(5,10)=[%.4f, %.4f] max|err| bisection=%.1e beta=%.1e", ci.lo, ci.hi, worst_bisect,
                           worst_beta)};
  });

  criterion(4, "sprt-calibration", [] {
    SprtParams sp;
    sp.theta = 0.5;
    sp.delta0 = sp.delta1 = 0.05;
    sp.alpha = sp.beta = 0.05;
    const int trials = 500;
    const double limit = 0.05 + 3 * std::sqrt(0.05 * 0.95 / trials);
    std::mt19937_64 gen(4242);
    auto error_rate = [&](double p, SprtDecision wrong) {
      std::bernoulli_distribution coin(p);
      int errors = 0;
      for (int t = 0; t < trials; ++t) {
        Sprt s(sp);
        while (s.feed(coin(gen)) == SprtDecision::Continue) {}
        errors += s.decision() == wrong;
      }
      return static_cast<double>(errors) / trials;
    };
    const double fn = error_rate(sp.p0(), SprtDecision::AcceptH1);
    const double fp = error_rate(sp.p1(), SprtDecision::AcceptH0);
    return Outcome{fn <= limit && fp <= limit, fmt("at p0: %.3f, at p1: %.3f, limit %.3f", fn, fp, limit)};
  });

  criterion(5, "delay-reuse", [] {
    const auto net = corpus("traingate.npta");
    const auto q = query(net, "Pr[<=100](<> Train(0).Cross)");
    RunParams p;
    p.epsilon = 0.01;
    p.seed = 555;
    const auto on = run_sequential(net, q, p);
    p.reuse = false;
    p.seed = 556;
    const auto off = run_sequential(net, q, p);
    const double diff = std::abs(on.p_hat - off.p_hat);

    Simulator with(net), without(net);
    without.set_reuse(false);
    double steps_on = 0, res_on = 0, steps_off = 0, res_off = 0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      Rng r1(run_seed(900, i)), r2(run_seed(900, i));
      const auto a = with.run(time_bound(300), nullptr, r1);
      const auto b = without.run(time_bound(300), nullptr, r2);
      steps_on += a.steps;
      res_on += a.resamples;
      steps_off += b.steps;
      res_off += b.resamples;
    }
    const double reduction = 1.0 - (res_on / steps_on) / (res_off / steps_off);
    return Outcome{diff <= 2 * p.epsilon && reduction >= 0.10,
                   fmt("on=%.4f off=%.4f |diff|=%.4f, resamples/step reduced by %.1f%%", on.p_hat, off.p_hat, diff,
                       100 * reduction)};
  });

  criterion(6, "distributed-bias", [] {
    const auto net = corpus("bias.npta");
    const auto q = query(net, "Pr[<=100](<> M.OK) >= 0.5");
    const int trials = 200;
    int naive1 = 0, naive16 = 0, mismatches = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      RunParams p;
      p.seed = splitmix64(t + 60000);
      p.delta0 = p.delta1 = 0.05;
      naive1 += run_naive_parallel(net, q, p).decision == Decision::AcceptH0;
      p.cores = 16;
      naive16 += run_naive_parallel(net, q, p).decision == Decision::AcceptH0;
      const auto many = run_parallel(net, q, p);
      p.cores = 1;
      const auto one = run_parallel(net, q, p);
      mismatches += !(one.same_outcome(many) && one.decision == many.decision && one.runs == many.runs);
    }
    const double f1 = static_cast<double>(naive1) / trials, f16 = static_cast<double>(naive16) / trials;
    return Outcome{f1 - f16 >= 0.2 && mismatches == 0,
                   fmt("naive accept K=1 %.3f K=16 %.3f, batched K=16 vs K=1 mismatches %d", f1, f16, mismatches)};
  });

  criterion(7, "sincos-circle", [] {
    const auto net = corpus("sincos.npta");
    Simulator sim(net);
    const auto s = static_cast<std::size_t>(net.find_clock("sin_t"));
    const auto c = static_cast<std::size_t>(net.find_clock("cos_t"));
    Rng rng(7);
    TraceRecorder rec;
    const auto r = sim.run(time_bound(12), nullptr, rng, &rec);
    double worst = 0.0;
    for (const auto& pt : rec.points)
      worst = std::max(worst, std::abs(pt.clocks[s] * pt.clocks[s] + pt.clocks[c] * pt.clocks[c] - 1.0));
    return Outcome{worst <= 0.05 && r.time >= 12.0,
                   fmt("max |sin^2+cos^2-1| = %.4f over %zu points", worst, rec.points.size())};
  });

  criterion(8, "monitor-oracle", [] {
    const auto net = corpus("race.npta");
    Simulator sim(net);
    std::vector<RecordedObservation> trace;
    sim.record_observations(&trace);
    std::mt19937_64 gen(8080);
    int runs = 0, mismatches = 0;
    for (int f = 0; f < 200; ++f) {
      const std::string text = testing::random_formula(gen, 1 + f % 3);
      const Expr e = resolve_in_network(parse_expression(text, true), net);
      Monitor mon(wmtl::from_expr(e, net.tau));
      for (int r = 0; r < 5; ++r, ++runs) {
        trace.clear();
        Rng rng(run_seed(static_cast<std::uint64_t>(f) + 5000, static_cast<std::uint64_t>(r)));
        const auto res = sim.run(time_bound(4), &mon, rng);
        mismatches += res.satisfied != testing::Oracle(trace, net.tau).sat(e, 0);
      }
    }
    return Outcome{runs == 1000 && mismatches == 0, fmt("%d runs, %d mismatches", runs, mismatches)};
  });

  criterion(9, "trajectory-filter", [] {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> step(0.0, 1.0);
    std::vector<TrajectoryPoint> raw(1'000'000);
    double v = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      v += step(gen);
      raw[i] = {static_cast<double>(i) * 1e-3, v};
    }
    const auto kept = filter_trajectory(raw, 1000);
    const auto again = filter_trajectory(kept, 1000, raw.front().t, raw.back().t);
    const double dev = testing::max_cell_deviation(raw, kept, 1000);
    return Outcome{kept.size() <= 4002 && dev <= 1.0 && again == kept,
                   fmt("%zu points kept, deviation %.3f cells, idempotent %s", kept.size(), dev,
                       again == kept ? "yes" : "no")};
  });

  criterion(10, "determinism", [] {
    const auto net = corpus("traingate.npta");
    int mismatches = 0, cases = 0;
    for (const char* text : {"Pr[<=100](<> Train(0).Cross)", "Pr[<=100](<> Train(5).Cross) >= 0.5",
                             "E[<=100;300](max: Gate.len)",
                             "Pr[<=100](<> Train(5).Cross) >= Pr[<=100](<> Train(0).Cross)"}) {
      const auto q = query(net, text);
      RunParams p;
      p.seed = 1010;
      p.batch = 16;
      p.delta0 = p.delta1 = 0.05;
      const auto ref = run_parallel(net, q, p);
      for (int k : {1, 2, 4}) {
        p.cores = k;
        for (int repeat = 0; repeat < 2; ++repeat, ++cases) mismatches += !ref.same_outcome(run_parallel(net, q, p));
      }
    }
    return Outcome{mismatches == 0, fmt("%d of %d repeated results differ", mismatches, cases)};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
