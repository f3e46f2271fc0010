#pragma once

#include <algorithm>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsmc/expr.hpp"
#include "nsmc/model.hpp"

namespace nsmc {

enum class FKind { True, False, Atom, Not, And, Or, Next, Until, Active, NextPending };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// WMTL formula. `Until` carries a bound relative to activation; `Active` and
/// `NextPending` only occur in residuals produced by progression.
struct Formula {
  FKind kind = FKind::True;
  Expr atom;
  std::vector<FormulaPtr> args;
  int clock = -1;
  double bound = kInfinity;  // Until: allowed growth of `clock`; Active: absolute deadline
};

enum class Verdict { Unknown, True, False };

enum class ObsKind { Initial, Interval, Point, DelayEnd, Transition };

/// What the monitor sees at one observation point.
struct Observation {
  ObsKind kind = ObsKind::Initial;
  Valuation state;
  std::span<const double> growth;  // accumulated growth per clock, never reset
};

// ---- construction -----------------------------------------------------------

namespace wmtl {

inline FormulaPtr make(Formula f) { return std::make_shared<const Formula>(std::move(f)); }

inline const FormulaPtr& truth() {
  static const FormulaPtr t = make({FKind::True, nullptr, {}, -1, kInfinity});
  return t;
}
inline const FormulaPtr& falsity() {
  static const FormulaPtr f = make({FKind::False, nullptr, {}, -1, kInfinity});
  return f;
}

inline FormulaPtr atom(Expr e) {
  if (e->op == Op::Const) return e->value != 0.0 ? truth() : falsity();
  return make({FKind::Atom, std::move(e), {}, -1, kInfinity});
}

inline FormulaPtr negate(const FormulaPtr& a) {
  if (a->kind == FKind::True) return falsity();
  if (a->kind == FKind::False) return truth();
  if (a->kind == FKind::Not) return a->args[0];
  return make({FKind::Not, nullptr, {a}, -1, kInfinity});
}

namespace detail {

// Flattens, drops units, short-circuits zeros, and merges Actives that differ
// only in their deadline: the earliest survives a conjunction, the latest a
// disjunction.
inline FormulaPtr junction(FKind kind, std::vector<FormulaPtr> in) {
  const FKind unit = kind == FKind::And ? FKind::True : FKind::False;
  const FKind zero = kind == FKind::And ? FKind::False : FKind::True;
  std::vector<FormulaPtr> out;
  out.reserve(in.size());
  auto push = [&](const FormulaPtr& f, auto&& self) -> bool {
    if (f->kind == zero) return false;
    if (f->kind == unit) return true;
    if (f->kind == kind) {
      for (const auto& g : f->args)
        if (!self(g, self)) return false;
      return true;
    }
    for (auto& g : out) {
      if (g == f) return true;
      if (f->kind == FKind::Active && g->kind == FKind::Active && g->args[0] == f->args[0] &&
          g->args[1] == f->args[1] && g->clock == f->clock) {
        const bool keep_f = kind == FKind::And ? f->bound < g->bound : f->bound > g->bound;
        if (keep_f) g = f;
        return true;
      }
    }
    out.push_back(f);
    return true;
  };
  for (const auto& f : in)
    if (!push(f, push)) return kind == FKind::And ? falsity() : truth();
  if (out.empty()) return kind == FKind::And ? truth() : falsity();
  if (out.size() == 1) return out[0];
  return make({kind, nullptr, std::move(out), -1, kInfinity});
}

}  // namespace detail

inline FormulaPtr conj(std::vector<FormulaPtr> fs) { return detail::junction(FKind::And, std::move(fs)); }
inline FormulaPtr disj(std::vector<FormulaPtr> fs) { return detail::junction(FKind::Or, std::move(fs)); }

inline FormulaPtr next(FormulaPtr a) { return make({FKind::Next, nullptr, {std::move(a)}, -1, kInfinity}); }

/// `a U[clock<=bound] b`; bound may be infinite.
inline FormulaPtr until(FormulaPtr a, FormulaPtr b, int clock, double bound) {
  return make({FKind::Until, nullptr, {std::move(a), std::move(b)}, clock, bound});
}

inline FormulaPtr eventually(FormulaPtr a, int clock, double bound) {
  return until(truth(), std::move(a), clock, bound);
}

inline FormulaPtr globally(FormulaPtr a, int clock, double bound) {
  return negate(eventually(negate(a), clock, bound));
}

/// Converts a resolved query formula. Unbounded operators use `tau` with an
/// infinite bound, so they are limited only by the run bound.
inline FormulaPtr from_expr(const Expr& e, int tau) {
  if (!e) return truth();
  if (!has_temporal(*e)) return atom(e);
  const int clk = e->bounded ? e->index : tau;
  const double d = e->bounded ? e->value : kInfinity;
  switch (e->op) {
    case Op::TEventually: return eventually(from_expr(e->args[0], tau), clk, d);
    case Op::TGlobally: return globally(from_expr(e->args[0], tau), clk, d);
    case Op::TNext: return next(from_expr(e->args[0], tau));
    case Op::TUntil: return until(from_expr(e->args[0], tau), from_expr(e->args[1], tau), clk, d);
    case Op::Not: return negate(from_expr(e->args[0], tau));
    case Op::And: return conj({from_expr(e->args[0], tau), from_expr(e->args[1], tau)});
    case Op::Or: return disj({from_expr(e->args[0], tau), from_expr(e->args[1], tau)});
    case Op::Imply:
      return disj({negate(from_expr(e->args[0], tau)), from_expr(e->args[1], tau)});
    default:
      throw std::invalid_argument("temporal operator under '" + std::string(op_symbol(e->op)) +
                                  "' is not a formula");
  }
}

inline std::string to_string(const FormulaPtr& f) {
  switch (f->kind) {
    case FKind::True: return "true";
    case FKind::False: return "false";
    case FKind::Atom: return nsmc::to_string(f->atom);
    case FKind::Not: return "!" + to_string(f->args[0]);
    case FKind::And:
    case FKind::Or: {
      std::string s = "(";
      for (std::size_t i = 0; i < f->args.size(); ++i) {
        if (i) s += f->kind == FKind::And ? " && " : " || ";
        s += to_string(f->args[i]);
      }
      return s + ")";
    }
    case FKind::Next: return "(next " + to_string(f->args[0]) + ")";
    case FKind::NextPending: return "(pending " + to_string(f->args[0]) + ")";
    case FKind::Until:
      return "(" + to_string(f->args[0]) + " U[" + std::to_string(f->clock) + "<=" +
             format_number(f->bound, false) + "] " + to_string(f->args[1]) + ")";
    case FKind::Active:
      return "(" + to_string(f->args[0]) + " U[" + std::to_string(f->clock) + " until " +
             format_number(f->bound, false) + "] " + to_string(f->args[1]) + ")";
  }
  return "?";
}

}  // namespace wmtl

// ---- progression -------------------------------------------------------------

/// Slack allowed when comparing accumulated clock growth against a deadline.
inline double deadline_slack(double deadline) {
  return kTimeEpsilon * std::max(1.0, std::fabs(deadline));
}

/// Residual obligation for the observation after `o`, given that `f` must
/// hold at `o`.
inline FormulaPtr progress(const FormulaPtr& f, const Observation& o) {
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
      return f;
    case FKind::Atom:
      return holds(f->atom, o.state) ? wmtl::truth() : wmtl::falsity();
    case FKind::Not: {
      auto r = progress(f->args[0], o);
      return r == f->args[0] ? f : wmtl::negate(r);
    }
    case FKind::And:
    case FKind::Or: {
      std::vector<FormulaPtr> parts;
      parts.reserve(f->args.size());
      const FKind zero = f->kind == FKind::And ? FKind::False : FKind::True;
      bool same = true;
      for (const auto& a : f->args) {
        auto r = progress(a, o);
        if (r->kind == zero) return r;
        same = same && r == a;
        parts.push_back(std::move(r));
      }
      return same ? f : wmtl::detail::junction(f->kind, std::move(parts));
    }
    case FKind::Next:
      return wmtl::make({FKind::NextPending, nullptr, {f->args[0]}, -1, kInfinity});
    case FKind::NextPending:
      return o.kind == ObsKind::Transition ? progress(f->args[0], o) : f;
    case FKind::Until: {
      const double start = o.growth[static_cast<std::size_t>(f->clock)];
      auto active = wmtl::make({FKind::Active, nullptr, f->args, f->clock, start + f->bound});
      return progress(active, o);
    }
    case FKind::Active: {
      const double g = o.growth[static_cast<std::size_t>(f->clock)];
      if (g > f->bound + deadline_slack(f->bound)) return wmtl::falsity();
      auto right = progress(f->args[1], o);
      if (right->kind == FKind::True) return right;
      auto left = progress(f->args[0], o);
      if (left->kind == FKind::False) return right;
      return wmtl::disj({right, wmtl::conj({left, f})});
    }
  }
  return f;
}

/// Truth value of a residual once the run has ended: pending obligations fail.
inline bool finalize(const FormulaPtr& f) {
  switch (f->kind) {
    case FKind::True: return true;
    case FKind::False: return false;
    case FKind::Not: return !finalize(f->args[0]);
    case FKind::And:
      return std::all_of(f->args.begin(), f->args.end(), [](const auto& a) { return finalize(a); });
    case FKind::Or:
      return std::any_of(f->args.begin(), f->args.end(), [](const auto& a) { return finalize(a); });
    default:
      return false;  // Active, NextPending; atoms never survive progression
  }
}

/// Stateful wrapper used by the simulator: progression, watch points and
/// the residual's sensitivity to the passage of time.
class Monitor {
 public:
  explicit Monitor(FormulaPtr f) : formula_(std::move(f)) { reset(); }

  void reset() {
    residual_ = formula_;
    cached_ = nullptr;
  }

  Verdict verdict() const {
    if (residual_->kind == FKind::True) return Verdict::True;
    if (residual_->kind == FKind::False) return Verdict::False;
    return Verdict::Unknown;
  }

  Verdict observe(const Observation& o) {
    residual_ = progress(residual_, o);
    return verdict();
  }

  bool finish() {
    if (residual_->kind != FKind::True && residual_->kind != FKind::False)
      residual_ = finalize(residual_) ? wmtl::truth() : wmtl::falsity();
    return residual_->kind == FKind::True;
  }

  const FormulaPtr& residual() const { return residual_; }
  const FormulaPtr& formula() const { return formula_; }

  /// True when observing points inside a delay could change the outcome.
  bool time_sensitive() {
    refresh();
    return sensitive_;
  }

  /// Delays in (0, horizon) at which an eagerly evaluated atom may change
  /// value or an active deadline is reached. Sorted, without duplicates.
  void watch_points(const Valuation& v, std::span<const double> rates,
                    std::span<const double> growth, double horizon, std::vector<double>& out) {
    refresh();
    out.clear();
    for (const auto* a : atoms_) crossing_points(*a, v, rates, out);
    for (const auto* f : actives_) {
      const double r = rates[static_cast<std::size_t>(f->clock)];
      if (r > 0.0) {
        const double d = (f->bound - growth[static_cast<std::size_t>(f->clock)]) / r;
        if (d > kTimeEpsilon) out.push_back(d);
      }
    }
    std::erase_if(out, [&](double d) { return !(d < horizon - kTimeEpsilon); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

 private:
  void refresh() {
    if (cached_ == residual_) return;
    cached_ = residual_;
    atoms_.clear();
    actives_.clear();
    sensitive_ = false;
    scan(*residual_);
  }

  void scan(const Formula& f) {
    switch (f.kind) {
      case FKind::Atom:
        if (reads_clock(*f.atom)) {
          atoms_.push_back(f.atom.get());
          sensitive_ = true;
        }
        break;
      case FKind::NextPending:
      case FKind::Next:
        break;
      case FKind::Active:
        if (std::isfinite(f.bound)) {
          actives_.push_back(&f);
          sensitive_ = true;
        }
        for (const auto& a : f.args) scan(*a);
        break;
      case FKind::Until:
        if (std::isfinite(f.bound)) sensitive_ = true;
        for (const auto& a : f.args) scan(*a);
        break;
      default:
        for (const auto& a : f.args) scan(*a);
        break;
    }
  }

  FormulaPtr formula_;
  FormulaPtr residual_;
  FormulaPtr cached_;
  std::vector<const Node*> atoms_;
  std::vector<const Formula*> actives_;
  bool sensitive_ = false;
};

}  // namespace nsmc
