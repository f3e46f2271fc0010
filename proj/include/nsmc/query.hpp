#pragma once

#include <string>
#include <vector>

#include "nsmc/expr.hpp"
#include "nsmc/model.hpp"

namespace nsmc {

enum class BoundKind { Time, Cost, Steps };

/// How long a run lasts: `<=M`, `x<=M` for any clock x, or `#<=M` steps.
struct RunBound {
  BoundKind kind = BoundKind::Time;
  double limit = 0.0;
  std::string clock;
  int clock_slot = -1;
};

enum class QueryKind { Estimate, HypTest, Compare, Expect, Simulate };

struct Query {
  QueryKind kind = QueryKind::Estimate;
  RunBound bound;
  Expr formula;            // Pr queries; may contain temporal operators
  double threshold = 0.0;  // HypTest
  RunBound bound2;         // Compare, right-hand side
  Expr formula2;
  int runs = 0;             // E[..;N] and simulate N
  bool maximize = true;     // E[..](max: ..) vs min
  std::vector<Expr> exprs;  // E: one expression; simulate: the monitored list
};

enum class PathKind { Eventually, Globally, Until, General };

/// Classifies the top-level shape of a Pr formula.
inline PathKind path_kind(const Expr& f) {
  if (!f || f->bounded) return PathKind::General;
  switch (f->op) {
    case Op::TEventually:
      return has_temporal(*f->args[0]) ? PathKind::General : PathKind::Eventually;
    case Op::TGlobally:
      return has_temporal(*f->args[0]) ? PathKind::General : PathKind::Globally;
    case Op::TUntil:
      return has_temporal(*f->args[0]) || has_temporal(*f->args[1]) ? PathKind::General
                                                                    : PathKind::Until;
    default:
      return PathKind::General;
  }
}

inline std::string to_string(const RunBound& b) {
  const std::string m = format_number(b.limit, b.limit == std::floor(b.limit));
  switch (b.kind) {
    case BoundKind::Time: return "<=" + m;
    case BoundKind::Cost: return b.clock + "<=" + m;
    case BoundKind::Steps: return "#<=" + m;
  }
  return m;
}

/// Canonical query text; parse_query reads it back to an identical Query.
inline std::string to_string(const Query& q) {
  switch (q.kind) {
    case QueryKind::Estimate:
      return "Pr[" + to_string(q.bound) + "](" + to_string(q.formula) + ")";
    case QueryKind::HypTest:
      return "Pr[" + to_string(q.bound) + "](" + to_string(q.formula) +
             ") >= " + format_number(q.threshold, false);
    case QueryKind::Compare:
      return "Pr[" + to_string(q.bound) + "](" + to_string(q.formula) + ") >= Pr[" +
             to_string(q.bound2) + "](" + to_string(q.formula2) + ")";
    case QueryKind::Expect:
      return "E[" + to_string(q.bound) + ";" + std::to_string(q.runs) + "](" +
             (q.maximize ? "max: " : "min: ") + to_string(q.exprs.at(0)) + ")";
    case QueryKind::Simulate: {
      std::string s = "simulate " + std::to_string(q.runs) + " [" + to_string(q.bound) + "]{";
      for (std::size_t i = 0; i < q.exprs.size(); ++i) {
        if (i) s += ", ";
        s += to_string(q.exprs[i]);
      }
      return s + "}";
    }
  }
  return {};
}

namespace detail {

inline void resolve_bound(RunBound& b, const Network& net) {
  if (b.kind != BoundKind::Cost) return;
  b.clock_slot = net.find_clock(b.clock);
  if (b.clock_slot < 0)
    throw ModelError({{Diagnostic::Severity::Error, {}, "unknown clock '" + b.clock + "' in run bound"}});
}

}  // namespace detail

/// Binds every name in the query to network slots. Throws ModelError.
inline Query resolve_query(Query q, const Network& net) {
  detail::resolve_bound(q.bound, net);
  detail::resolve_bound(q.bound2, net);
  q.formula = resolve_in_network(q.formula, net);
  q.formula2 = resolve_in_network(q.formula2, net);
  for (auto& e : q.exprs) e = resolve_in_network(e, net);
  return q;
}

}  // namespace nsmc
