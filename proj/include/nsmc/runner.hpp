#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nsmc/model.hpp"
#include "nsmc/monitor.hpp"
#include "nsmc/query.hpp"
#include "nsmc/rng.hpp"
#include "nsmc/simulator.hpp"
#include "nsmc/stat.hpp"

namespace nsmc {

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunParams {
  double alpha = 0.05;
  double beta = 0.05;
  double epsilon = 0.05;
  double delta0 = 0.01;
  double delta1 = 0.01;
  int cores = 1;
  int batch = 64;
  std::uint64_t seed = 0;
  bool reuse = true;
  std::int64_t max_pairs = 1'000'000;  // budget for probability comparison
};

/// Result of one run as seen by the decision procedures.
struct RunOutcome {
  bool success = false;
  double aggregate = 0.0;  // Pr: end time; E: min/max value; comparison: second outcome
  bool deadlock = false;

  bool operator==(const RunOutcome&) const = default;
};

enum class Decision { None, AcceptH0, AcceptH1, FirstGreater, SecondGreater, Indistinguishable };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::None: return "none";
    case Decision::AcceptH0: return "H0 accepted";
    case Decision::AcceptH1: return "H1 accepted";
    case Decision::FirstGreater: return "first greater";
    case Decision::SecondGreater: return "second greater";
    case Decision::Indistinguishable: return "indistinguishable";
  }
  return "?";
}

struct StatResult {
  QueryKind kind = QueryKind::Estimate;
  Decision decision = Decision::None;
  std::int64_t runs = 0;       // outcomes consumed by the decision procedure
  std::int64_t generated = 0;  // runs simulated, including those past the decision point
  std::int64_t successes = 0;
  std::int64_t deadlocks = 0;
  double p_hat = 0.0;
  double epsilon = 0.0;
  CpInterval ci;
  double threshold = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::int64_t discordant = 0;
  std::vector<RunOutcome> outcomes;  // consumed prefix in canonical order

  /// Equality of everything that depends only on the canonical outcome stream.
  bool same_outcome(const StatResult& o) const {
    return kind == o.kind && decision == o.decision && runs == o.runs && successes == o.successes &&
           deadlocks == o.deadlocks && p_hat == o.p_hat && ci.lo == o.ci.lo && ci.hi == o.ci.hi &&
           mean == o.mean && stddev == o.stddev && discordant == o.discordant &&
           outcomes == o.outcomes;
  }
};

// ---- single runs ---------------------------------------------------------------

namespace detail {

class ExtremumObserver : public RunObserver {
 public:
  ExtremumObserver(Expr e, bool maximize) : expr_(std::move(e)), maximize_(maximize) {}

  void reset() { value_ = maximize_ ? -kInfinity : kInfinity; }
  double value() const { return value_; }

  void on_point(const SimState& s, ObsKind, std::string_view) override {
    const double v = eval(expr_, s.valuation());
    value_ = maximize_ ? std::max(value_, v) : std::min(value_, v);
  }

 private:
  Expr expr_;
  bool maximize_;
  double value_ = 0.0;
};

}  // namespace detail

/// Executes run `i` of a query. Owns a simulator, so one engine per thread.
class RunEngine {
 public:
  RunEngine(const Network& net, const Query& q, bool reuse) : query_(q), sim_(net) {
    sim_.set_reuse(reuse);
    if (q.kind == QueryKind::Simulate) throw std::invalid_argument("simulate queries produce trajectories, not outcomes");
    if (q.kind == QueryKind::Expect) {
      observer_ = std::make_unique<detail::ExtremumObserver>(q.exprs.at(0), q.maximize);
    } else {
      monitor_ = std::make_unique<Monitor>(wmtl::from_expr(q.formula, net.tau));
      if (q.kind == QueryKind::Compare)
        monitor2_ = std::make_unique<Monitor>(wmtl::from_expr(q.formula2, net.tau));
    }
  }

  RunOutcome run(std::uint64_t master, std::uint64_t index) {
    Rng rng(run_seed(master, index));
    RunOutcome out;
    try {
      if (observer_) {
        observer_->reset();
        auto r = sim_.run(query_.bound, nullptr, rng, observer_.get());
        out.success = true;
        out.aggregate = observer_->value();
        out.deadlock = r.cause == Termination::Deadlock;
        return out;
      }
      auto r = sim_.run(query_.bound, monitor_.get(), rng);
      out.success = r.satisfied;
      out.aggregate = r.time;
      out.deadlock = r.cause == Termination::Deadlock;
      if (monitor2_) {
        auto r2 = sim_.run(query_.bound2, monitor2_.get(), rng);
        out.aggregate = r2.satisfied ? 1.0 : 0.0;
        out.deadlock = out.deadlock || r2.cause == Termination::Deadlock;
      }
    } catch (const EvalError& e) {
      throw RunError("run " + std::to_string(index) + " aborted: " + e.what());
    }
    return out;
  }

  Simulator& simulator() { return sim_; }

 private:
  Query query_;
  Simulator sim_;
  std::unique_ptr<Monitor> monitor_;
  std::unique_ptr<Monitor> monitor2_;
  std::unique_ptr<detail::ExtremumObserver> observer_;
};

// ---- decision procedures over the canonical stream -----------------------------

/// Feeds outcomes, in canonical order, to the procedure matching the query.
class Decider {
 public:
  Decider(const Query& q, const RunParams& p) : query_(q), params_(p) {
    result_.kind = q.kind;
    switch (q.kind) {
      case QueryKind::Estimate:
        target_ = required_runs(p.epsilon, p.alpha);
        result_.epsilon = p.epsilon;
        break;
      case QueryKind::HypTest:
        sprt_.emplace(SprtParams{q.threshold, p.delta0, p.delta1, p.alpha, p.beta});
        result_.threshold = q.threshold;
        break;
      case QueryKind::Compare:
        compare_.emplace(p.alpha, p.beta, std::max(p.delta0, p.delta1), p.max_pairs);
        break;
      case QueryKind::Expect:
        target_ = q.runs;
        break;
      case QueryKind::Simulate:
        throw std::invalid_argument("simulate queries have no decision procedure");
    }
  }

  /// Returns true once the decision has been made; later outcomes are ignored.
  bool feed(const RunOutcome& o) {
    if (done_) return true;
    result_.outcomes.push_back(o);
    ++result_.runs;
    if (o.success) ++result_.successes;
    if (o.deadlock) ++result_.deadlocks;
    if (result_.runs == kDeadlockWindow) check_deadlocks();
    switch (query_.kind) {
      case QueryKind::Estimate:
      case QueryKind::Expect:
        done_ = result_.runs >= target_;
        break;
      case QueryKind::HypTest:
        done_ = sprt_->feed(o.success) != SprtDecision::Continue;
        break;
      case QueryKind::Compare:
        done_ = compare_->feed(o.success, o.aggregate != 0.0) != CompareDecision::Continue;
        break;
      case QueryKind::Simulate:
        break;
    }
    if (done_) complete();
    return done_;
  }

  bool done() const { return done_; }
  const StatResult& result() const { return result_; }
  StatResult take() { return std::move(result_); }

 private:
  static constexpr std::int64_t kDeadlockWindow = 100;

  void check_deadlocks() const {
    if (result_.deadlocks * 2 > result_.runs)
      throw RunError(std::to_string(result_.deadlocks) + " of the first " +
                     std::to_string(result_.runs) +
                     " runs deadlocked (an invariant expired with no action possible); "
                     "check invariants and guards");
  }

  void complete() {
    if (result_.runs < kDeadlockWindow) check_deadlocks();
    switch (query_.kind) {
      case QueryKind::Estimate: {
        auto e = estimate(result_.successes, result_.runs, params_.epsilon, params_.alpha);
        result_.p_hat = e.p_hat;
        result_.ci = e.ci;
        break;
      }
      case QueryKind::HypTest:
        result_.decision = sprt_->decision() == SprtDecision::AcceptH0 ? Decision::AcceptH0
                                                                      : Decision::AcceptH1;
        result_.p_hat = static_cast<double>(result_.successes) / static_cast<double>(result_.runs);
        break;
      case QueryKind::Compare:
        switch (compare_->decision()) {
          case CompareDecision::FirstGreater: result_.decision = Decision::FirstGreater; break;
          case CompareDecision::SecondGreater: result_.decision = Decision::SecondGreater; break;
          default: result_.decision = Decision::Indistinguishable; break;
        }
        result_.discordant = compare_->discordant();
        break;
      case QueryKind::Expect: {
        std::vector<double> xs;
        xs.reserve(result_.outcomes.size());
        for (const auto& o : result_.outcomes) xs.push_back(o.aggregate);
        auto m = moments(xs);
        result_.mean = m.mean;
        result_.stddev = m.stddev;
        break;
      }
      case QueryKind::Simulate:
        break;
    }
  }

  Query query_;
  RunParams params_;
  StatResult result_;
  std::int64_t target_ = 0;
  std::optional<Sprt> sprt_;
  std::optional<PairedComparison> compare_;
  bool done_ = false;
};

// ---- orchestration -------------------------------------------------------------

inline StatResult run_sequential(const Network& net, const Query& q, const RunParams& p) {
  RunEngine engine(net, q, p.reuse);
  Decider decider(q, p);
  std::uint64_t i = 0;
  while (!decider.feed(engine.run(p.seed, i))) ++i;
  auto r = decider.take();
  r.generated = r.runs;
  return r;
}

/// Computes outcomes for run indices [lo, hi) under the given master seed.
using RangeExecutor =
    std::function<std::vector<RunOutcome>(std::uint64_t master, std::uint64_t lo, std::uint64_t hi)>;

/// Round-based coordinator: each round hands every executor a batch of
/// consecutive run indices, waits for all of them, and then feeds the round to
/// the decision procedure in run-index order. A failing executor's batch is
/// recomputed by `fallback`.
inline StatResult run_rounds(const Query& q, const RunParams& p,
                             const std::vector<RangeExecutor>& executors,
                             const RangeExecutor& fallback) {
  if (executors.empty()) throw std::invalid_argument("no executors");
  if (p.batch < 1) throw std::invalid_argument("batch size must be at least 1");
  Decider decider(q, p);
  const std::uint64_t k = executors.size();
  const std::uint64_t b = static_cast<std::uint64_t>(p.batch);
  std::vector<std::vector<RunOutcome>> slots(k);
  std::vector<std::exception_ptr> errors(k);
  std::uint64_t base = 0;
  std::int64_t generated = 0;
  while (!decider.done()) {
    auto work = [&](std::uint64_t w) {
      try {
        slots[w] = executors[w](p.seed, base + w * b, base + (w + 1) * b);
        if (slots[w].size() != b) throw std::runtime_error("executor returned a short batch");
        errors[w] = nullptr;
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (k == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(k);
      for (std::uint64_t w = 0; w < k; ++w) threads.emplace_back(work, w);
      for (auto& t : threads) t.join();
    }
    for (std::uint64_t w = 0; w < k; ++w) {
      if (!errors[w]) continue;
      try {
        std::rethrow_exception(errors[w]);
      } catch (const RunError&) {
        throw;  // a model problem, not a worker failure
      } catch (...) {
        slots[w] = fallback(p.seed, base + w * b, base + (w + 1) * b);
      }
    }
    generated += static_cast<std::int64_t>(k * b);
    for (std::uint64_t w = 0; w < k && !decider.done(); ++w)
      for (const auto& o : slots[w])
        if (decider.feed(o)) break;
    base += k * b;
  }
  auto r = decider.take();
  r.generated = generated;
  return r;
}

/// Local executor: a fresh engine per thread, with an optional hook called
/// before each run (tests use it to inject scheduling noise).
class LocalExecutor {
 public:
  using Hook = std::function<void(std::uint64_t index)>;

  LocalExecutor(const Network& net, const Query& q, bool reuse, Hook hook = {})
      : engine_(std::make_shared<RunEngine>(net, q, reuse)), hook_(std::move(hook)) {}

  std::vector<RunOutcome> operator()(std::uint64_t master, std::uint64_t lo, std::uint64_t hi) const {
    std::vector<RunOutcome> out;
    out.reserve(hi - lo);
    for (std::uint64_t i = lo; i < hi; ++i) {
      if (hook_) hook_(i);
      out.push_back(engine_->run(master, i));
    }
    return out;
  }

 private:
  std::shared_ptr<RunEngine> engine_;
  Hook hook_;
};

/// K local workers exchanging batches of B runs per round.
inline StatResult run_parallel(const Network& net, const Query& q, const RunParams& p,
                               LocalExecutor::Hook hook = {}) {
  if (p.cores < 1) throw std::invalid_argument("cores must be at least 1");
  std::vector<RangeExecutor> execs;
  for (int w = 0; w < p.cores; ++w) execs.emplace_back(LocalExecutor(net, q, p.reuse, hook));
  return run_rounds(q, p, execs, LocalExecutor(net, q, p.reuse));
}

/// Deliberately biased scheduler: K virtual workers each simulate their own
/// runs back to back, and a result is fed to the test as soon as its worker
/// finishes it in simulated time. Fast (short) runs therefore arrive first.
inline StatResult run_naive_parallel(const Network& net, const Query& q, const RunParams& p) {
  if (q.kind != QueryKind::HypTest) throw std::invalid_argument("naive mode is for hypothesis tests");
  if (p.cores < 1) throw std::invalid_argument("cores must be at least 1");
  RunEngine engine(net, q, p.reuse);
  Decider decider(q, p);
  const std::uint64_t k = static_cast<std::uint64_t>(p.cores);
  struct Ready {
    double at;
    std::uint64_t worker;
    std::uint64_t seq;
    RunOutcome outcome;
    bool operator>(const Ready& o) const {
      return at != o.at ? at > o.at : worker > o.worker;
    }
  };
  std::priority_queue<Ready, std::vector<Ready>, std::greater<>> events;
  auto launch = [&](std::uint64_t w, std::uint64_t seq, double now) {
    const auto o = engine.run(p.seed, seq * k + w);
    events.push({now + o.aggregate, w, seq, o});
  };
  for (std::uint64_t w = 0; w < k; ++w) launch(w, 0, 0.0);
  std::int64_t generated = static_cast<std::int64_t>(k);
  while (!events.empty()) {
    const Ready r = events.top();
    events.pop();
    if (decider.feed(r.outcome)) break;
    launch(r.worker, r.seq + 1, r.at);
    ++generated;
  }
  auto res = decider.take();
  res.generated = generated;
  return res;
}

}  // namespace nsmc
