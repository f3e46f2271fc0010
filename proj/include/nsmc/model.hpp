#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "nsmc/expr.hpp"

namespace nsmc {

struct SourcePos {
  int line = 0;
  int col = 0;
};

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  SourcePos pos;
  std::string message;

  bool is_error() const { return severity == Severity::Error; }
};

inline std::string to_string(const Diagnostic& d) {
  std::ostringstream os;
  os << d.pos.line << ":" << d.pos.col << ": " << (d.is_error() ? "error" : "warning") << ": "
     << d.message;
  return os.str();
}

inline bool has_errors(const std::vector<Diagnostic>& ds) {
  return std::any_of(ds.begin(), ds.end(), [](const Diagnostic& d) { return d.is_error(); });
}

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(std::vector<Diagnostic> diags)
      : std::runtime_error(render(diags)), diagnostics(std::move(diags)) {}

  std::vector<Diagnostic> diagnostics;

 private:
  static std::string render(const std::vector<Diagnostic>& ds) {
    std::string s;
    for (const auto& d : ds) {
      if (!s.empty()) s += "\n";
      s += to_string(d);
    }
    return s;
  }
};

// ---- syntax tree of a model file --------------------------------------------

enum class DeclKind { Int, Double, Bool, Clock, Chan };

struct Decl {
  DeclKind kind = DeclKind::Int;
  bool is_const = false;
  bool broadcast = true;  // only meaningful for channels
  std::string name;
  Expr init;
  SourcePos pos;
};

struct RateDecl {
  std::string clock;
  Expr rate;
  SourcePos pos;
};

struct LocationDecl {
  std::string name;
  Expr invariant;
  std::vector<RateDecl> rates;
  Expr exp_rate;
  SourcePos pos;
};

struct AssignDecl {
  std::string target;
  Expr value;
  SourcePos pos;
};

struct BranchDecl {
  Expr weight;  // null means 1
  std::vector<AssignDecl> updates;
  std::string target;
  SourcePos pos;
};

enum class SyncKind { Internal, Output, Input };

struct EdgeDecl {
  std::string source;
  Expr guard;
  SyncKind sync = SyncKind::Internal;
  std::string channel;
  bool branching = false;  // written with explicit `-> target { }` arms
  std::vector<BranchDecl> branches;
  SourcePos pos;
};

struct ParamDecl {
  DeclKind kind = DeclKind::Int;
  std::string name;
};

struct TemplateDecl {
  std::string name;
  std::vector<ParamDecl> params;
  std::vector<Decl> decls;
  std::vector<LocationDecl> locations;
  std::vector<EdgeDecl> edges;
  std::string initial;  // empty: first location
  SourcePos pos;
};

struct InstanceDecl {
  std::string name;
  std::string template_name;
  std::vector<Expr> args;
  bool inline_decl = false;  // written directly in the system line
  SourcePos pos;
};

struct ModelAst {
  std::vector<Decl> globals;
  std::vector<TemplateDecl> templates;
  std::vector<InstanceDecl> instances;
  std::vector<std::string> system;
  SourcePos system_pos;
};

// ---- instantiated network ---------------------------------------------------

struct VarInfo {
  std::string name;  // qualified for locals: "Gate.len"
  ValueType type = ValueType::Int;
  double initial = 0.0;
  int owner = -1;  // automaton index, -1 for globals
};

struct ClockInfo {
  std::string name;
  double initial = 0.0;
  int owner = -1;
};

struct Update {
  bool to_clock = false;
  int slot = -1;
  ValueType type = ValueType::Real;
  Expr value;
};

struct Branch {
  Expr weight;  // null means 1
  std::vector<Update> updates;
  int target = -1;
};

struct Edge {
  int source = -1;
  Expr guard;  // null means true
  SyncKind sync = SyncKind::Internal;
  int channel = -1;
  std::vector<Branch> branches;
  int line = 0;
};

struct Location {
  std::string name;
  Expr invariant;                          // null means true
  std::vector<std::pair<int, Expr>> rates;  // clock slot -> rate expression
  Expr exp_rate;                           // null when absent
};

struct Automaton {
  std::string name;
  std::string template_name;
  std::vector<double> args;
  std::vector<Location> locations;
  std::vector<Edge> edges;
  int initial = 0;
  // Output and internal edges leaving each location, then input edges.
  std::vector<std::vector<int>> active_edges;
  std::vector<std::vector<int>> input_edges;

  int find_location(std::string_view n) const {
    for (std::size_t i = 0; i < locations.size(); ++i)
      if (locations[i].name == n) return static_cast<int>(i);
    return -1;
  }
};

struct Network {
  std::vector<VarInfo> vars;
  std::vector<ClockInfo> clocks;
  std::vector<std::string> channels;
  std::vector<Automaton> automata;
  std::map<std::string, std::pair<double, ValueType>> constants;
  int tau = -1;  // the implicit clock with rate 1 that is never reset

  int find_var(std::string_view n) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i].name == n) return static_cast<int>(i);
    return -1;
  }
  int find_clock(std::string_view n) const {
    for (std::size_t i = 0; i < clocks.size(); ++i)
      if (clocks[i].name == n) return static_cast<int>(i);
    return -1;
  }
  int find_automaton(std::string_view n) const {
    for (std::size_t i = 0; i < automata.size(); ++i)
      if (automata[i].name == n) return static_cast<int>(i);
    return -1;
  }
};

inline constexpr const char* kTauClock = "tau";

namespace detail {

struct Symbol {
  enum class Kind { Const, Var, Clock, Chan } kind = Kind::Const;
  double value = 0.0;
  ValueType type = ValueType::Int;
  int slot = -1;
  std::string qualified;
};

using SymbolTable = std::unordered_map<std::string, Symbol>;

inline ValueType value_type(DeclKind k) {
  switch (k) {
    case DeclKind::Double: return ValueType::Real;
    case DeclKind::Bool: return ValueType::Bool;
    case DeclKind::Clock: return ValueType::Real;
    default: return ValueType::Int;
  }
}

inline std::string format_args(const std::vector<double>& args) {
  std::string s;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ",";
    s += format_number(args[i], args[i] == std::floor(args[i]));
  }
  return s;
}

}  // namespace detail

/// Instance name used when a template is instantiated inline in the system line.
inline std::string inline_instance_name(const std::string& tmpl, const std::vector<double>& args) {
  return tmpl + "(" + detail::format_args(args) + ")";
}

/// Builds a Network from a parsed model, recording every problem as a
/// diagnostic instead of stopping at the first one.
class NetworkBuilder {
 public:
  NetworkBuilder(const ModelAst& ast, std::vector<Diagnostic>& diags) : ast_(ast), diags_(diags) {}

  std::optional<Network> build() {
    declare_globals();
    for (const auto& item : ast_.system) add_system_item(item);
    check_rate_owners();
    if (has_errors(diags_)) return std::nullopt;
    return std::move(net_);
  }

  /// Instantiates `t` with integer/real arguments as automaton `name`, adding
  /// its local variables and clocks to the network under renamed slots.
  std::optional<Automaton> instantiate(const TemplateDecl& t, const std::vector<double>& args,
                                       const std::string& name, SourcePos where) {
    if (args.size() != t.params.size()) {
      error(where, "template '" + t.name + "' expects " + std::to_string(t.params.size()) +
                       " argument(s), got " + std::to_string(args.size()));
      return std::nullopt;
    }
    const int self = static_cast<int>(net_.automata.size());
    detail::SymbolTable scope = globals_;
    for (std::size_t i = 0; i < args.size(); ++i) {
      const auto& p = t.params[i];
      const auto type = detail::value_type(p.kind);
      if (type == ValueType::Int && args[i] != std::floor(args[i]))
        error(where, "argument " + std::to_string(i + 1) + " of '" + t.name + "' must be an integer");
      scope[p.name] = detail::Symbol{detail::Symbol::Kind::Const, args[i], type, -1, p.name};
    }
    for (const auto& d : t.decls) declare(d, scope, name + ".", self);

    Automaton a;
    a.name = name;
    a.template_name = t.name;
    a.args = args;
    std::set<std::string> seen;
    for (const auto& ld : t.locations) {
      if (!seen.insert(ld.name).second) error(ld.pos, "duplicate location '" + ld.name + "'");
      Location loc;
      loc.name = ld.name;
      a.locations.push_back(std::move(loc));
    }
    if (a.locations.empty()) {
      error(t.pos, "template '" + t.name + "' has no locations");
      return std::nullopt;
    }
    a.initial = 0;
    if (!t.initial.empty()) {
      a.initial = a.find_location(t.initial);
      if (a.initial < 0) {
        error(t.pos, "initial location '" + t.initial + "' is not declared");
        a.initial = 0;
      }
    }
    for (std::size_t i = 0; i < t.locations.size(); ++i) {
      const auto& ld = t.locations[i];
      auto& loc = a.locations[i];
      loc.invariant = resolve_checked(ld.invariant, scope, ld.pos, Use::Constraint, "invariant");
      for (const auto& r : ld.rates) {
        auto it = scope.find(r.clock);
        if (it == scope.end() || it->second.kind != detail::Symbol::Kind::Clock) {
          error(r.pos, "rate given for undeclared clock '" + r.clock + "'");
          continue;
        }
        if (it->second.slot == net_.tau) error(r.pos, "the rate of 'tau' is fixed to 1");
        auto e = resolve_checked(r.rate, scope, r.pos, Use::Rate, "rate");
        loc.rates.emplace_back(it->second.slot, e);
      }
      loc.exp_rate = resolve_checked(ld.exp_rate, scope, ld.pos, Use::Rate, "exponential rate");
      if (loc.exp_rate && loc.invariant && reads_clock(loc.invariant))
        error(ld.pos, "location '" + ld.name +
                          "' has both a clock invariant and an exponential rate; exponential "
                          "delays are only allowed where the delay is unbounded");
    }
    for (const auto& ed : t.edges) {
      Edge e;
      e.line = ed.pos.line;
      e.source = a.find_location(ed.source);
      if (e.source < 0) error(ed.pos, "edge source '" + ed.source + "' is not a location");
      e.guard = resolve_checked(ed.guard, scope, ed.pos, Use::Constraint, "guard");
      e.sync = ed.sync;
      if (ed.sync != SyncKind::Internal) {
        auto it = scope.find(ed.channel);
        if (it == scope.end() || it->second.kind != detail::Symbol::Kind::Chan)
          error(ed.pos, "undeclared channel '" + ed.channel + "'");
        else
          e.channel = it->second.slot;
      }
      if (ed.branches.empty()) error(ed.pos, "edge without target");
      for (const auto& bd : ed.branches) {
        Branch b;
        b.target = a.find_location(bd.target);
        if (b.target < 0) error(bd.pos, "edge target '" + bd.target + "' is not a location");
        b.weight = resolve_checked(bd.weight, scope, bd.pos, Use::Weight, "weight");
        if (b.weight && b.weight->op == Op::Const && b.weight->value < 0)
          error(bd.pos, "negative branch weight");
        for (const auto& u : bd.updates) {
          auto it = scope.find(u.target);
          if (it == scope.end()) {
            error(u.pos, "assignment to undeclared name '" + u.target + "'");
            continue;
          }
          const auto& sym = it->second;
          if (sym.kind == detail::Symbol::Kind::Const || sym.kind == detail::Symbol::Kind::Chan) {
            error(u.pos, "cannot assign to '" + u.target + "'");
            continue;
          }
          if (sym.kind == detail::Symbol::Kind::Clock && sym.slot == net_.tau) {
            error(u.pos, "'tau' cannot be assigned");
            continue;
          }
          Update up;
          up.to_clock = sym.kind == detail::Symbol::Kind::Clock;
          up.slot = sym.slot;
          up.type = sym.type;
          up.value = resolve_checked(u.value, scope, u.pos, Use::Value, "assignment");
          if (up.value && sym.kind == detail::Symbol::Kind::Var && sym.type == ValueType::Int &&
              infer_type(*up.value) == ValueType::Real)
            error(u.pos, "real value assigned to int variable '" + u.target + "'");
          b.updates.push_back(std::move(up));
        }
        e.branches.push_back(std::move(b));
      }
      if (e.sync != SyncKind::Input && e.source >= 0 && ed.guard == nullptr &&
          e.branches.size() == 1 && e.branches[0].target == e.source &&
          !a.locations[static_cast<std::size_t>(e.source)].exp_rate) {
        const bool resets = std::any_of(e.branches[0].updates.begin(), e.branches[0].updates.end(),
                                        [](const Update& u) { return u.to_clock; });
        if (!resets)
          warn(ed.pos, "guard-free self-loop without clock reset may be zeno");
      }
      a.edges.push_back(std::move(e));
    }
    index_edges(a);
    for (std::size_t l = 0; l < a.locations.size(); ++l) {
      const auto& loc = a.locations[l];
      const bool bounded = loc.invariant && reads_clock(loc.invariant);
      if (!bounded && !loc.exp_rate && !a.active_edges[l].empty())
        error(t.locations[l].pos, "location '" + loc.name +
                                      "' has no delay bound and no exponential rate but can "
                                      "output; add an invariant or 'exprate'");
    }
    return a;
  }

  Network& network() { return net_; }

 private:
  enum class Use { Constraint, Rate, Weight, Value };

  void error(SourcePos p, std::string m) {
    diags_.push_back({Diagnostic::Severity::Error, p, std::move(m)});
  }
  void warn(SourcePos p, std::string m) {
    diags_.push_back({Diagnostic::Severity::Warning, p, std::move(m)});
  }

  void declare_globals() {
    net_.tau = static_cast<int>(net_.clocks.size());
    net_.clocks.push_back({kTauClock, 0.0, -1});
    globals_[kTauClock] = {detail::Symbol::Kind::Clock, 0, ValueType::Real, net_.tau, kTauClock};
    for (const auto& d : ast_.globals) declare(d, globals_, "", -1);
  }

  void declare(const Decl& d, detail::SymbolTable& scope, const std::string& prefix, int owner) {
    if (d.name == kTauClock) {
      error(d.pos, "'tau' is reserved for the global reference clock");
      return;
    }
    if (scope.count(d.name) && (owner < 0 || local_names_.count(prefix + d.name))) {
      error(d.pos, "duplicate declaration of '" + d.name + "'");
      return;
    }
    local_names_.insert(prefix + d.name);
    detail::Symbol s;
    s.qualified = prefix + d.name;
    s.type = detail::value_type(d.kind);
    double init = 0.0;
    if (d.init) {
      auto e = resolve(d.init, scope, d.pos);
      if (e) {
        if (reads_state(*e))
          error(d.pos, "initializer of '" + d.name + "' must be a constant expression");
        else
          init = safe_eval(*e, d.pos);
        if (d.kind == DeclKind::Int && infer_type(*e) == ValueType::Real)
          error(d.pos, "real initializer for int '" + d.name + "'");
      }
    }
    switch (d.kind) {
      case DeclKind::Chan:
        if (!d.broadcast) error(d.pos, "only broadcast channels are supported ('" + d.name + "')");
        s.kind = detail::Symbol::Kind::Chan;
        s.slot = static_cast<int>(net_.channels.size());
        net_.channels.push_back(s.qualified);
        break;
      case DeclKind::Clock:
        s.kind = detail::Symbol::Kind::Clock;
        s.slot = static_cast<int>(net_.clocks.size());
        net_.clocks.push_back({s.qualified, init, owner});
        break;
      default:
        if (d.is_const) {
          s.kind = detail::Symbol::Kind::Const;
          s.value = init;
          if (owner < 0) net_.constants[d.name] = {init, s.type};
        } else {
          s.kind = detail::Symbol::Kind::Var;
          s.slot = static_cast<int>(net_.vars.size());
          if (s.type == ValueType::Bool) init = init != 0.0 ? 1.0 : 0.0;
          net_.vars.push_back({s.qualified, s.type, init, owner});
        }
        break;
    }
    scope[d.name] = s;
  }

  static bool reads_state(const Node& n) {
    if (n.op == Op::Var || n.op == Op::Clock || n.op == Op::Loc) return true;
    for (const auto& a : n.args)
      if (reads_state(*a)) return true;
    return false;
  }

  double safe_eval(const Node& n, SourcePos p) {
    try {
      return eval(n, Valuation{});
    } catch (const EvalError& e) {
      error(p, e.what());
      return 0.0;
    }
  }

  /// Replaces names by slots/constants. Returns null (with a diagnostic) on failure.
  Expr resolve(const Expr& e, const detail::SymbolTable& scope, SourcePos p) {
    if (!e) return nullptr;
    if (e->op == Op::Name) {
      auto it = scope.find(e->name);
      if (it == scope.end()) {
        error(p, "undeclared name '" + e->name + "'");
        return nullptr;
      }
      const auto& s = it->second;
      switch (s.kind) {
        case detail::Symbol::Kind::Const: return constant(s.value, s.type);
        case detail::Symbol::Kind::Var: return var_ref(s.slot, s.qualified, s.type);
        case detail::Symbol::Kind::Clock: return clock_ref(s.slot, s.qualified);
        case detail::Symbol::Kind::Chan:
          error(p, "channel '" + e->name + "' used as a value");
          return nullptr;
      }
    }
    if (is_temporal(e->op)) {
      error(p, "temporal operator inside a model expression");
      return nullptr;
    }
    std::vector<Expr> args;
    args.reserve(e->args.size());
    for (const auto& a : e->args) {
      auto r = resolve(a, scope, p);
      if (!r) return nullptr;
      args.push_back(std::move(r));
    }
    return args.empty() ? e : with_args(e, std::move(args));
  }

  Expr resolve_checked(const Expr& e, const detail::SymbolTable& scope, SourcePos p, Use use,
                       const char* what) {
    if (!e) return nullptr;
    auto r = resolve(e, scope, p);
    if (!r) return nullptr;
    const auto type = infer_type(*r);
    switch (use) {
      case Use::Constraint:
        if (type != ValueType::Bool) error(p, std::string(what) + " must be boolean");
        if (!clock_linear(*r))
          error(p, std::string(what) + " uses clocks non-linearly; only linear clock constraints "
                                       "are supported");
        break;
      case Use::Rate:
      case Use::Weight:
        if (type == ValueType::Bool) error(p, std::string(what) + " must be numeric");
        if (use == Use::Rate && reads_clock(*r))
          error(p, std::string(what) + " must not depend on clocks");
        if (r->op == Op::Const && r->value < 0) error(p, std::string(what) + " is negative");
        break;
      case Use::Value:
        break;
    }
    return r;
  }

  void add_system_item(const std::string& item) {
    const InstanceDecl* inst = nullptr;
    for (const auto& i : ast_.instances)
      if (i.name == item) inst = &i;
    const TemplateDecl* tmpl = nullptr;
    std::vector<double> args;
    SourcePos where = ast_.system_pos;
    std::string name = item;
    if (inst) {
      where = inst->pos;
      tmpl = find_template(inst->template_name);
      if (!tmpl) {
        error(where, "unknown template '" + inst->template_name + "'");
        return;
      }
      for (const auto& a : inst->args) {
        auto r = resolve(a, globals_, where);
        if (!r) return;
        if (reads_state(*r)) {
          error(where, "template arguments must be constant");
          return;
        }
        args.push_back(safe_eval(*r, where));
      }
      if (inst->inline_decl) name = inline_instance_name(inst->template_name, args);
    } else {
      tmpl = find_template(item);
      if (!tmpl) {
        error(where, "system refers to unknown instance or template '" + item + "'");
        return;
      }
    }
    if (net_.find_automaton(name) >= 0) {
      error(where, "duplicate instance '" + name + "' in system");
      return;
    }
    auto a = instantiate(*tmpl, args, name, where);
    if (a) net_.automata.push_back(std::move(*a));
  }

  const TemplateDecl* find_template(const std::string& n) const {
    for (const auto& t : ast_.templates)
      if (t.name == n) return &t;
    return nullptr;
  }

  static void index_edges(Automaton& a) {
    a.active_edges.assign(a.locations.size(), {});
    a.input_edges.assign(a.locations.size(), {});
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
      const auto& e = a.edges[i];
      if (e.source < 0) continue;
      auto& bucket = e.sync == SyncKind::Input ? a.input_edges : a.active_edges;
      bucket[static_cast<std::size_t>(e.source)].push_back(static_cast<int>(i));
    }
  }

  void check_rate_owners() {
    std::vector<int> owner(net_.clocks.size(), -1);
    for (std::size_t ai = 0; ai < net_.automata.size(); ++ai)
      for (const auto& loc : net_.automata[ai].locations)
        for (const auto& [clk, _] : loc.rates) {
          auto& o = owner[static_cast<std::size_t>(clk)];
          if (o >= 0 && o != static_cast<int>(ai))
            error(ast_.system_pos, "rate of clock '" + net_.clocks[static_cast<std::size_t>(clk)].name +
                                       "' is set by more than one process");
          o = static_cast<int>(ai);
        }
  }

  const ModelAst& ast_;
  std::vector<Diagnostic>& diags_;
  Network net_;
  detail::SymbolTable globals_;
  std::set<std::string> local_names_;
};

/// Static checks; an empty result means the model passed all of them.
inline std::vector<Diagnostic> validate(const ModelAst& ast) {
  std::vector<Diagnostic> diags;
  NetworkBuilder(ast, diags).build();
  return diags;
}

/// Builds the network, throwing ModelError if validation reports errors.
inline Network build_network(const ModelAst& ast) {
  std::vector<Diagnostic> diags;
  auto net = NetworkBuilder(ast, diags).build();
  if (!net) throw ModelError(std::move(diags));
  return std::move(*net);
}

/// Resolves names in a query expression against an instantiated network.
/// Accepted forms: globals, constants, `tau`, `Inst.Location`, `Inst.var`,
/// `Inst.clock`, where `Inst` may be an inline instance name such as `Train(0)`.
inline Expr resolve_in_network(const Expr& e, const Network& net) {
  if (!e) return nullptr;
  if (e->op == Op::Name) {
    const auto& n = e->name;
    if (int v = net.find_var(n); v >= 0)
      return var_ref(v, n, net.vars[static_cast<std::size_t>(v)].type);
    if (int c = net.find_clock(n); c >= 0) return clock_ref(c, n);
    if (auto it = net.constants.find(n); it != net.constants.end())
      return constant(it->second.first, it->second.second);
    const auto dot = n.rfind('.');
    if (dot != std::string::npos) {
      const int ai = net.find_automaton(n.substr(0, dot));
      if (ai >= 0) {
        const int li = net.automata[static_cast<std::size_t>(ai)].find_location(n.substr(dot + 1));
        if (li >= 0) return loc_ref(ai, li, n);
      } else {
        throw ModelError({{Diagnostic::Severity::Error, {}, "unknown process '" + n.substr(0, dot) + "'"}});
      }
    }
    throw ModelError({{Diagnostic::Severity::Error, {}, "unknown name '" + n + "'"}});
  }
  std::vector<Expr> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) args.push_back(resolve_in_network(a, net));
  if (is_temporal(e->op) && e->bounded) {
    Node n = *e;
    n.args = std::move(args);
    n.index = net.find_clock(e->name);
    if (n.index < 0)
      throw ModelError({{Diagnostic::Severity::Error, {}, "unknown clock '" + e->name + "' in bound"}});
    return make_node(std::move(n));
  }
  return args.empty() ? e : with_args(e, std::move(args));
}

// ---- dependency analysis -----------------------------------------------------

/// For each edge of each process, the processes whose sampled delay must be
/// discarded when that edge fires. Process granularity, conservative.
class DependencyMatrix {
 public:
  DependencyMatrix() = default;
  explicit DependencyMatrix(std::vector<std::vector<std::vector<int>>> sets)
      : sets_(std::move(sets)) {}

  const std::vector<int>& affected(int automaton, int edge) const {
    return sets_[static_cast<std::size_t>(automaton)][static_cast<std::size_t>(edge)];
  }
  std::size_t processes() const { return sets_.size(); }

 private:
  std::vector<std::vector<std::vector<int>>> sets_;
};

namespace detail {

struct ReadSet {
  std::set<int> vars;
  std::set<int> clocks;
};

// Everything that shapes a process's delay distribution and edge choice.
inline ReadSet delay_reads(const Automaton& a) {
  std::vector<int> vs, cs;
  for (const auto& loc : a.locations) {
    collect_reads(loc.invariant, vs, cs);
    collect_reads(loc.exp_rate, vs, cs);
    for (const auto& [clk, r] : loc.rates) {
      collect_reads(r, vs, cs);
      cs.push_back(clk);
    }
  }
  for (const auto& e : a.edges) {
    if (e.sync == SyncKind::Input) continue;
    collect_reads(e.guard, vs, cs);
    for (const auto& b : e.branches) collect_reads(b.weight, vs, cs);
  }
  return {std::set<int>(vs.begin(), vs.end()), std::set<int>(cs.begin(), cs.end())};
}

}  // namespace detail

inline DependencyMatrix analyze_dependencies(const Network& net) {
  const std::size_t n = net.automata.size();
  std::vector<detail::ReadSet> reads;
  reads.reserve(n);
  for (const auto& a : net.automata) reads.push_back(detail::delay_reads(a));

  // Clocks whose rate expression reads a given variable.
  std::map<int, std::set<int>> rate_clocks_of_var;
  for (const auto& a : net.automata)
    for (const auto& loc : a.locations)
      for (const auto& [clk, r] : loc.rates) {
        std::vector<int> vs, cs;
        collect_reads(r, vs, cs);
        for (int v : vs) rate_clocks_of_var[v].insert(clk);
      }

  std::vector<std::vector<std::vector<int>>> sets(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto& a = net.automata[p];
    for (const auto& e : a.edges) {
      std::set<int> wvars, wclocks;
      for (const auto& b : e.branches) {
        for (const auto& u : b.updates) (u.to_clock ? wclocks : wvars).insert(u.slot);
        if (b.target >= 0)
          for (const auto& [clk, _] : a.locations[static_cast<std::size_t>(b.target)].rates)
            wclocks.insert(clk);
      }
      if (e.source >= 0)
        for (const auto& [clk, _] : a.locations[static_cast<std::size_t>(e.source)].rates)
          wclocks.insert(clk);
      for (int v : wvars)
        if (auto it = rate_clocks_of_var.find(v); it != rate_clocks_of_var.end())
          wclocks.insert(it->second.begin(), it->second.end());

      std::vector<int> affected;
      for (std::size_t q = 0; q < n; ++q) {
        bool dep = q == p;
        if (!dep && e.sync == SyncKind::Output) {
          for (const auto& f : net.automata[q].edges)
            if (f.sync == SyncKind::Input && f.channel == e.channel) dep = true;
        }
        if (!dep)
          dep = std::any_of(wvars.begin(), wvars.end(),
                            [&](int v) { return reads[q].vars.count(v) > 0; }) ||
                std::any_of(wclocks.begin(), wclocks.end(),
                            [&](int c) { return reads[q].clocks.count(c) > 0; });
        if (dep) affected.push_back(static_cast<int>(q));
      }
      sets[p].push_back(std::move(affected));
    }
  }
  return DependencyMatrix(std::move(sets));
}

}  // namespace nsmc
