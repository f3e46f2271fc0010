#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsmc/timeset.hpp"

namespace nsmc {

/// Raised when an expression cannot be evaluated (division by zero, unresolved
/// name, non-linear clock constraint at run time). Aborts the current run.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t {
  Const,
  Name,   // unresolved identifier (possibly qualified: "T.T3", "Train(0).Cross")
  Var,
  Clock,
  Loc,    // instance `index` is in location `index2`
  Neg,
  Not,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Lt,
  Le,
  Eq,
  Ne,
  Ge,
  Gt,
  And,
  Or,
  Imply,
  Ite,
  Min,
  Max,
  Abs,
  // temporal operators, only produced by the query parser
  TEventually,
  TGlobally,
  TNext,
  TUntil,
};

enum class ValueType : std::uint8_t { Int, Real, Bool };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  ValueType type = ValueType::Int;  // meaningful for Const/Var/Clock/Loc leaves
  double value = 0.0;               // Const value, temporal bound
  int index = -1;                   // slot of Var/Clock, instance of Loc, clock of temporal op
  int index2 = -1;                  // location of Loc
  bool bounded = false;             // temporal op carries a [clock<=bound] annotation
  std::string name;                 // identifier text, temporal clock name
  std::vector<Expr> args;
};

inline constexpr double kTimeEpsilon = 1e-9;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---- construction -----------------------------------------------------------

inline Expr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

inline Expr constant(double v, ValueType t = ValueType::Real) {
  Node n;
  n.op = Op::Const;
  n.type = t;
  n.value = v;
  return make_node(std::move(n));
}

inline Expr int_constant(double v) { return constant(v, ValueType::Int); }
inline Expr bool_constant(bool v) { return constant(v ? 1.0 : 0.0, ValueType::Bool); }

inline Expr name_ref(std::string name) {
  Node n;
  n.op = Op::Name;
  n.name = std::move(name);
  return make_node(std::move(n));
}

inline Expr var_ref(int slot, std::string name, ValueType t) {
  Node n;
  n.op = Op::Var;
  n.index = slot;
  n.type = t;
  n.name = std::move(name);
  return make_node(std::move(n));
}

inline Expr clock_ref(int slot, std::string name) {
  Node n;
  n.op = Op::Clock;
  n.index = slot;
  n.type = ValueType::Real;
  n.name = std::move(name);
  return make_node(std::move(n));
}

inline Expr loc_ref(int instance, int location, std::string name) {
  Node n;
  n.op = Op::Loc;
  n.index = instance;
  n.index2 = location;
  n.type = ValueType::Bool;
  n.name = std::move(name);
  return make_node(std::move(n));
}

inline Expr unary(Op op, Expr a) {
  Node n;
  n.op = op;
  n.args = {std::move(a)};
  return make_node(std::move(n));
}

inline Expr binary(Op op, Expr a, Expr b) {
  Node n;
  n.op = op;
  n.args = {std::move(a), std::move(b)};
  return make_node(std::move(n));
}

inline Expr ite(Expr c, Expr a, Expr b) {
  Node n;
  n.op = Op::Ite;
  n.args = {std::move(c), std::move(a), std::move(b)};
  return make_node(std::move(n));
}

/// Copy of `e` with its children replaced.
inline Expr with_args(const Expr& e, std::vector<Expr> args) {
  Node n = *e;
  n.args = std::move(args);
  return make_node(std::move(n));
}

inline bool is_temporal(Op op) {
  return op == Op::TEventually || op == Op::TGlobally || op == Op::TNext || op == Op::TUntil;
}

inline bool is_comparison(Op op) {
  return op == Op::Lt || op == Op::Le || op == Op::Eq || op == Op::Ne || op == Op::Ge ||
         op == Op::Gt;
}

// ---- evaluation -------------------------------------------------------------

/// Read-only view of the quantities an expression may reference.
struct Valuation {
  std::span<const double> vars;
  std::span<const double> clocks;
  std::span<const int> locs;
};

inline double eval(const Node& n, const Valuation& v) {
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      return v.vars[static_cast<std::size_t>(n.index)];
    case Op::Clock:
      return v.clocks[static_cast<std::size_t>(n.index)];
    case Op::Loc:
      return v.locs[static_cast<std::size_t>(n.index)] == n.index2 ? 1.0 : 0.0;
    case Op::Name:
      throw EvalError("unresolved name '" + n.name + "'");
    case Op::Neg:
      return -eval(*n.args[0], v);
    case Op::Not:
      return eval(*n.args[0], v) != 0.0 ? 0.0 : 1.0;
    case Op::Add:
      return eval(*n.args[0], v) + eval(*n.args[1], v);
    case Op::Sub:
      return eval(*n.args[0], v) - eval(*n.args[1], v);
    case Op::Mul:
      return eval(*n.args[0], v) * eval(*n.args[1], v);
    case Op::Div: {
      const double d = eval(*n.args[1], v);
      if (d == 0.0) throw EvalError("division by zero");
      return eval(*n.args[0], v) / d;
    }
    case Op::Mod: {
      const double d = eval(*n.args[1], v);
      if (d == 0.0) throw EvalError("modulo by zero");
      return std::fmod(eval(*n.args[0], v), d);
    }
    case Op::Lt:
      return eval(*n.args[0], v) < eval(*n.args[1], v) ? 1.0 : 0.0;
    case Op::Le:
      return eval(*n.args[0], v) <= eval(*n.args[1], v) ? 1.0 : 0.0;
    case Op::Eq:
      return eval(*n.args[0], v) == eval(*n.args[1], v) ? 1.0 : 0.0;
    case Op::Ne:
      return eval(*n.args[0], v) != eval(*n.args[1], v) ? 1.0 : 0.0;
    case Op::Ge:
      return eval(*n.args[0], v) >= eval(*n.args[1], v) ? 1.0 : 0.0;
    case Op::Gt:
      return eval(*n.args[0], v) > eval(*n.args[1], v) ? 1.0 : 0.0;
    case Op::And:
      return (eval(*n.args[0], v) != 0.0 && eval(*n.args[1], v) != 0.0) ? 1.0 : 0.0;
    case Op::Or:
      return (eval(*n.args[0], v) != 0.0 || eval(*n.args[1], v) != 0.0) ? 1.0 : 0.0;
    case Op::Imply:
      return (eval(*n.args[0], v) == 0.0 || eval(*n.args[1], v) != 0.0) ? 1.0 : 0.0;
    case Op::Ite:
      return eval(*n.args[0], v) != 0.0 ? eval(*n.args[1], v) : eval(*n.args[2], v);
    case Op::Min:
      return std::min(eval(*n.args[0], v), eval(*n.args[1], v));
    case Op::Max:
      return std::max(eval(*n.args[0], v), eval(*n.args[1], v));
    case Op::Abs:
      return std::fabs(eval(*n.args[0], v));
    case Op::TEventually:
    case Op::TGlobally:
    case Op::TNext:
    case Op::TUntil:
      throw EvalError("temporal operator in state expression");
  }
  throw EvalError("bad expression node");
}

inline double eval(const Expr& e, const Valuation& v) { return eval(*e, v); }
inline bool holds(const Expr& e, const Valuation& v) { return !e || eval(*e, v) != 0.0; }

// ---- linear evolution under delay ------------------------------------------

/// Value `a + b*d` of a numeric expression after delaying `d` time units.
struct Affine {
  double a = 0.0;
  double b = 0.0;
};

/// Evaluates `n` as an affine function of the delay, given per-clock rates.
/// Returns nullopt when the expression is not linear in the delay.
inline std::optional<Affine> eval_affine(const Node& n, const Valuation& v,
                                         std::span<const double> rates) {
  switch (n.op) {
    case Op::Clock: {
      const auto i = static_cast<std::size_t>(n.index);
      return Affine{v.clocks[i], rates[i]};
    }
    case Op::Neg: {
      auto x = eval_affine(*n.args[0], v, rates);
      if (!x) return std::nullopt;
      return Affine{-x->a, -x->b};
    }
    case Op::Add:
    case Op::Sub: {
      auto x = eval_affine(*n.args[0], v, rates);
      auto y = eval_affine(*n.args[1], v, rates);
      if (!x || !y) return std::nullopt;
      if (n.op == Op::Add) return Affine{x->a + y->a, x->b + y->b};
      return Affine{x->a - y->a, x->b - y->b};
    }
    case Op::Mul: {
      auto x = eval_affine(*n.args[0], v, rates);
      auto y = eval_affine(*n.args[1], v, rates);
      if (!x || !y) return std::nullopt;
      if (x->b != 0.0 && y->b != 0.0) return std::nullopt;
      return Affine{x->a * y->a, x->a * y->b + x->b * y->a};
    }
    case Op::Div: {
      auto x = eval_affine(*n.args[0], v, rates);
      auto y = eval_affine(*n.args[1], v, rates);
      if (!x || !y || y->b != 0.0) return std::nullopt;
      if (y->a == 0.0) throw EvalError("division by zero");
      return Affine{x->a / y->a, x->b / y->a};
    }
    case Op::Ite: {
      auto c = eval_affine(*n.args[0], v, rates);
      if (!c || c->b != 0.0) return std::nullopt;
      return eval_affine(*n.args[c->a != 0.0 ? 1 : 2], v, rates);
    }
    default:
      break;
  }
  // Anything else is constant under delay iff no clock is read below it.
  struct ClockScan {
    static bool has_clock(const Node& m) {
      if (m.op == Op::Clock) return true;
      for (const auto& a : m.args)
        if (has_clock(*a)) return true;
      return false;
    }
  };
  if (ClockScan::has_clock(n)) {
    // Comparisons and boolean connectives over clocks are piecewise constant,
    // not affine; callers handle those through time sets.
    return std::nullopt;
  }
  return Affine{eval(n, v), 0.0};
}

namespace detail {

// Delay where `a + b*d` crosses zero, clamped so that tiny negative roots
// produced by accumulated rounding count as "now".
inline double root(const Affine& f) {
  const double r = -f.a / f.b;
  return (r < 0.0 && r > -kTimeEpsilon) ? 0.0 : r;
}

inline TimeSet comparison_set(Op op, const Affine& f) {
  // set of d >= 0 with f(d) `op` 0
  if (f.b == 0.0) {
    bool t = false;
    switch (op) {
      case Op::Lt: t = f.a < 0; break;
      case Op::Le: t = f.a <= 0; break;
      case Op::Eq: t = f.a == 0; break;
      case Op::Ne: t = f.a != 0; break;
      case Op::Ge: t = f.a >= 0; break;
      case Op::Gt: t = f.a > 0; break;
      default: break;
    }
    return t ? TimeSet::all() : TimeSet::none();
  }
  const double r = root(f);
  const bool rising = f.b > 0.0;
  switch (op) {
    case Op::Lt:
    case Op::Le:
      return rising ? TimeSet::interval(0.0, r) : TimeSet::interval(r, kInfinity);
    case Op::Ge:
    case Op::Gt:
      return rising ? TimeSet::interval(r, kInfinity) : TimeSet::interval(0.0, r);
    case Op::Eq:
      return TimeSet::interval(r, r);
    case Op::Ne:
      return TimeSet::all();
    default:
      return TimeSet::none();
  }
}

}  // namespace detail

/// Closure of the set of delays d >= 0 after which boolean expression `n`
/// holds. nullopt when a clock occurs non-linearly.
inline std::optional<TimeSet> timeset(const Node& n, const Valuation& v,
                                      std::span<const double> rates) {
  switch (n.op) {
    case Op::And:
    case Op::Or:
    case Op::Imply: {
      auto x = timeset(*n.args[0], v, rates);
      if (!x) return std::nullopt;
      if (n.op == Op::And && x->empty()) return x;
      auto y = timeset(*n.args[1], v, rates);
      if (!y) return std::nullopt;
      if (n.op == Op::And) return x->intersect(*y);
      if (n.op == Op::Or) return x->unite(*y);
      return x->complement().unite(*y);
    }
    case Op::Not: {
      auto x = timeset(*n.args[0], v, rates);
      if (!x) return std::nullopt;
      return x->complement();
    }
    case Op::Ite: {
      auto c = timeset(*n.args[0], v, rates);
      auto x = timeset(*n.args[1], v, rates);
      auto y = timeset(*n.args[2], v, rates);
      if (!c || !x || !y) return std::nullopt;
      return c->intersect(*x).unite(c->complement().intersect(*y));
    }
    case Op::Lt:
    case Op::Le:
    case Op::Eq:
    case Op::Ne:
    case Op::Ge:
    case Op::Gt: {
      auto x = eval_affine(*n.args[0], v, rates);
      auto y = eval_affine(*n.args[1], v, rates);
      if (!x || !y) return std::nullopt;
      return detail::comparison_set(n.op, Affine{x->a - y->a, x->b - y->b});
    }
    default: {
      auto x = eval_affine(n, v, rates);
      if (!x || x->b != 0.0) return std::nullopt;
      return x->a != 0.0 ? TimeSet::all() : TimeSet::none();
    }
  }
}

inline std::optional<TimeSet> timeset(const Expr& e, const Valuation& v,
                                      std::span<const double> rates) {
  if (!e) return TimeSet::all();
  return timeset(*e, v, rates);
}

/// Appends the delays d > 0 at which some atomic comparison inside `n` changes
/// truth value. Returns false if a comparison is not linear in the delay (its
/// crossings are then unknown and skipped).
inline bool crossing_points(const Node& n, const Valuation& v, std::span<const double> rates,
                            std::vector<double>& out) {
  if (is_comparison(n.op)) {
    auto x = eval_affine(*n.args[0], v, rates);
    auto y = eval_affine(*n.args[1], v, rates);
    if (!x || !y) return false;
    const Affine f{x->a - y->a, x->b - y->b};
    if (f.b != 0.0) {
      const double r = -f.a / f.b;
      if (r > kTimeEpsilon && std::isfinite(r)) out.push_back(r);
    }
    return true;
  }
  bool ok = true;
  for (const auto& a : n.args) ok = crossing_points(*a, v, rates, out) && ok;
  return ok;
}

// ---- static queries ---------------------------------------------------------

inline bool reads_clock(const Node& n) {
  if (n.op == Op::Clock) return true;
  for (const auto& a : n.args)
    if (reads_clock(*a)) return true;
  return false;
}

inline bool reads_clock(const Expr& e) { return e && reads_clock(*e); }

inline bool has_temporal(const Node& n) {
  if (is_temporal(n.op)) return true;
  for (const auto& a : n.args)
    if (has_temporal(*a)) return true;
  return false;
}

/// Collects the variable and clock slots read by an expression.
inline void collect_reads(const Expr& e, std::vector<int>& vars, std::vector<int>& clocks) {
  if (!e) return;
  if (e->op == Op::Var) vars.push_back(e->index);
  if (e->op == Op::Clock) clocks.push_back(e->index);
  for (const auto& a : e->args) collect_reads(a, vars, clocks);
}

/// True when clocks occur linearly, so that time sets are exact.
inline bool clock_linear(const Node& n) {
  switch (n.op) {
    case Op::Mul:
      if (reads_clock(*n.args[0]) && reads_clock(*n.args[1])) return false;
      break;
    case Op::Div:
    case Op::Mod:
      if (reads_clock(*n.args[1])) return false;
      if (n.op == Op::Mod && reads_clock(*n.args[0])) return false;
      break;
    case Op::Min:
    case Op::Max:
    case Op::Abs:
      if (reads_clock(n)) return false;
      break;
    case Op::Ite:
      if (reads_clock(*n.args[0])) return false;
      break;
    default:
      break;
  }
  for (const auto& a : n.args)
    if (!clock_linear(*a)) return false;
  return true;
}

/// Static result type. Arithmetic promotes to Real on division or any Real operand.
inline ValueType infer_type(const Node& n) {
  switch (n.op) {
    case Op::Const:
    case Op::Var:
    case Op::Clock:
    case Op::Loc:
    case Op::Name:
      return n.type;
    case Op::Neg:
    case Op::Abs: {
      const auto t = infer_type(*n.args[0]);
      return t == ValueType::Bool ? ValueType::Int : t;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Mod:
    case Op::Min:
    case Op::Max: {
      const auto a = infer_type(*n.args[0]);
      const auto b = infer_type(*n.args[1]);
      return (a == ValueType::Real || b == ValueType::Real) ? ValueType::Real : ValueType::Int;
    }
    case Op::Div:
      return ValueType::Real;
    case Op::Ite: {
      const auto a = infer_type(*n.args[1]);
      const auto b = infer_type(*n.args[2]);
      if (a == b) return a;
      return (a == ValueType::Real || b == ValueType::Real) ? ValueType::Real : ValueType::Int;
    }
    default:
      return ValueType::Bool;
  }
}

// ---- printing and comparison -----------------------------------------------

inline std::string format_number(double v, bool integral) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (!integral && s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline const char* op_symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Mod: return "%";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::Ge: return ">=";
    case Op::Gt: return ">";
    case Op::And: return "&&";
    case Op::Or: return "||";
    case Op::Imply: return "imply";
    case Op::Min: return "min";
    case Op::Max: return "max";
    case Op::Abs: return "abs";
    default: return "?";
  }
}

/// Fully parenthesized rendering that the parser reads back to the same tree.
inline std::string to_string(const Node& n) {
  auto bound = [&] {
    return n.bounded ? "[" + n.name + "<=" + format_number(n.value, false) + "]" : std::string{};
  };
  switch (n.op) {
    case Op::Const:
      if (n.type == ValueType::Bool) return n.value != 0.0 ? "true" : "false";
      return format_number(n.value, n.type == ValueType::Int);
    case Op::Name:
    case Op::Var:
    case Op::Clock:
    case Op::Loc:
      return n.name;
    case Op::Neg:
      return "-(" + to_string(*n.args[0]) + ")";
    case Op::Not:
      return "!(" + to_string(*n.args[0]) + ")";
    case Op::Ite:
      return "(" + to_string(*n.args[0]) + " ? " + to_string(*n.args[1]) + " : " +
             to_string(*n.args[2]) + ")";
    case Op::Min:
    case Op::Max:
      return std::string(op_symbol(n.op)) + "(" + to_string(*n.args[0]) + ", " +
             to_string(*n.args[1]) + ")";
    case Op::Abs:
      return "abs(" + to_string(*n.args[0]) + ")";
    case Op::TEventually:
      return "(<>" + bound() + " " + to_string(*n.args[0]) + ")";
    case Op::TGlobally:
      return "([]" + bound() + " " + to_string(*n.args[0]) + ")";
    case Op::TNext:
      return "(next " + to_string(*n.args[0]) + ")";
    case Op::TUntil:
      return "(" + to_string(*n.args[0]) + " U" + bound() + " " + to_string(*n.args[1]) + ")";
    default:
      return "(" + to_string(*n.args[0]) + " " + op_symbol(n.op) + " " + to_string(*n.args[1]) +
             ")";
  }
}

inline std::string to_string(const Expr& e) { return e ? to_string(*e) : std::string("true"); }

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op || a->index != b->index || a->index2 != b->index2 ||
      a->bounded != b->bounded || a->name != b->name || a->args.size() != b->args.size())
    return false;
  if (a->op == Op::Const && (a->type != b->type || a->value != b->value)) return false;
  if (a->bounded && a->value != b->value) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!structurally_equal(a->args[i], b->args[i])) return false;
  return true;
}

}  // namespace nsmc
