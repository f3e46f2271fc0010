#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nsmc/lexer.hpp"
#include "nsmc/model.hpp"
#include "nsmc/query.hpp"

namespace nsmc {

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

  // ---- models ----------------------------------------------------------------

  ModelAst model() {
    ModelAst m;
    bool have_system = false;
    while (!at(Tok::End)) {
      if (is_kw("system")) {
        system_line(m);
        have_system = true;
        break;
      }
      if (is_kw("template")) {
        m.templates.push_back(template_decl());
      } else if (is_decl_start()) {
        decls(m.globals);
      } else if (at(Tok::Ident) && peek(1).kind == Tok::Assign) {
        m.instances.push_back(instance_decl());
      } else {
        fail("expected a declaration, template, instance or 'system'");
      }
    }
    if (!have_system) fail("missing 'system' line");
    expect(Tok::End, "after the system line");
    return m;
  }

  // ---- queries ---------------------------------------------------------------

  Query query() {
    Query q;
    if (is_kw("Pr")) {
      next();
      q.bound = bound_in_brackets();
      q.formula = parenthesized_formula();
      q.kind = QueryKind::Estimate;
      if (accept(Tok::Ge)) {
        if (is_kw("Pr")) {
          next();
          q.kind = QueryKind::Compare;
          q.bound2 = bound_in_brackets();
          q.formula2 = parenthesized_formula();
        } else {
          const Token& t = cur();
          q.threshold = signed_number();
          if (q.threshold < 0.0 || q.threshold > 1.0)
            throw ParseError(t.pos, "probability threshold must lie in [0,1]");
          q.kind = QueryKind::HypTest;
        }
      }
    } else if (is_kw("E")) {
      next();
      expect(Tok::LBracket, "after 'E'");
      q.bound = bound_spec();
      expect(Tok::Semi, "between bound and run count");
      q.runs = positive_int("run count");
      expect(Tok::RBracket, "after run count");
      expect(Tok::LParen, "before 'max:' or 'min:'");
      if (is_kw("max")) q.maximize = true;
      else if (is_kw("min")) q.maximize = false;
      else fail("expected 'max' or 'min'");
      next();
      expect(Tok::Colon, "after max/min");
      q.exprs.push_back(expression(false));
      expect(Tok::RParen, "to close the expression");
      q.kind = QueryKind::Expect;
    } else if (is_kw("simulate")) {
      next();
      q.runs = positive_int("simulation count");
      expect(Tok::LBracket, "before the run bound");
      q.bound = bound_spec();
      expect(Tok::RBracket, "after the run bound");
      expect(Tok::LBrace, "before the expression list");
      q.exprs.push_back(expression(false));
      while (accept(Tok::Comma)) q.exprs.push_back(expression(false));
      expect(Tok::RBrace, "after the expression list");
      q.kind = QueryKind::Simulate;
    } else {
      fail("expected 'Pr', 'E' or 'simulate'");
    }
    expect(Tok::End, "after the query");
    return q;
  }

  Expr standalone_expression(bool temporal) {
    auto e = expression(temporal);
    expect(Tok::End, "after the expression");
    return e;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t k) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool at(Tok k) const { return cur().kind == k; }
  bool is_kw(std::string_view kw) const { return at(Tok::Ident) && cur().text == kw; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(Tok k) {
    if (!at(k)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    const auto& t = cur();
    std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(t.pos, what + ", found " + got);
  }
  const Token& expect(Tok k, const std::string& where) {
    if (!at(k)) fail(std::string("expected ") + describe(k) + " " + where);
    return next();
  }
  std::string ident(const std::string& what) {
    if (!at(Tok::Ident)) fail("expected " + what);
    return next().text;
  }

  bool is_decl_start() const {
    return is_kw("const") || is_kw("int") || is_kw("double") || is_kw("bool") || is_kw("clock") ||
           is_kw("broadcast") || is_kw("chan");
  }

  std::optional<DeclKind> type_kw() {
    if (is_kw("int")) return next(), DeclKind::Int;
    if (is_kw("double")) return next(), DeclKind::Double;
    if (is_kw("bool")) return next(), DeclKind::Bool;
    if (is_kw("clock")) return next(), DeclKind::Clock;
    return std::nullopt;
  }

  void decls(std::vector<Decl>& out) {
    const SourcePos start = cur().pos;
    if (is_kw("broadcast") || is_kw("chan")) {
      bool broadcast = false;
      if (is_kw("broadcast")) {
        next();
        broadcast = true;
      }
      if (!is_kw("chan")) fail("expected 'chan'");
      next();
      do {
        Decl d;
        d.kind = DeclKind::Chan;
        d.broadcast = broadcast;
        d.pos = cur().pos;
        d.name = ident("channel name");
        out.push_back(std::move(d));
      } while (accept(Tok::Comma));
      expect(Tok::Semi, "after channel declaration");
      return;
    }
    bool is_const = false;
    if (is_kw("const")) {
      next();
      is_const = true;
    }
    auto kind = type_kw();
    if (!kind) fail("expected a type ('int', 'double', 'bool' or 'clock')");
    if (is_const && *kind == DeclKind::Clock) throw ParseError(start, "clocks cannot be const");
    do {
      Decl d;
      d.kind = *kind;
      d.is_const = is_const;
      d.pos = cur().pos;
      d.name = ident("name in declaration");
      if (accept(Tok::Assign)) d.init = expression(false);
      else if (is_const) fail("expected '=' in constant declaration");
      out.push_back(std::move(d));
    } while (accept(Tok::Comma));
    expect(Tok::Semi, "after declaration");
  }

  TemplateDecl template_decl() {
    TemplateDecl t;
    t.pos = cur().pos;
    next();  // template
    t.name = ident("template name");
    expect(Tok::LParen, "after template name");
    if (!at(Tok::RParen)) {
      do {
        accept_kw("const");
        auto kind = type_kw();
        if (!kind || *kind == DeclKind::Clock) fail("expected parameter type 'int', 'double' or 'bool'");
        ParamDecl p;
        p.kind = *kind;
        p.name = ident("parameter name");
        t.params.push_back(std::move(p));
      } while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "after parameters");
    expect(Tok::LBrace, "to open template body");
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) fail("expected '}' to close template '" + t.name + "'");
      if (is_kw("location")) {
        t.locations.push_back(location_decl());
      } else if (is_kw("init")) {
        next();
        t.initial = ident("initial location");
        expect(Tok::Semi, "after initial location");
      } else if (is_decl_start()) {
        decls(t.decls);
      } else if (at(Tok::Ident) && peek(1).kind == Tok::Arrow) {
        t.edges.push_back(edge_decl());
      } else {
        fail("expected 'location', 'init', a declaration or an edge");
      }
    }
    next();
    return t;
  }

  void accept_kw(std::string_view kw) {
    if (is_kw(kw)) next();
  }

  LocationDecl location_decl() {
    LocationDecl l;
    next();  // location
    l.pos = cur().pos;
    l.name = ident("location name");
    if (accept(Tok::Semi)) return l;
    expect(Tok::LBrace, "or ';' after location name");
    while (!accept(Tok::RBrace)) {
      if (is_kw("invariant")) {
        next();
        if (l.invariant) fail("duplicate invariant");
        l.invariant = expression(false);
      } else if (is_kw("rate")) {
        next();
        RateDecl r;
        r.pos = cur().pos;
        r.clock = ident("clock name");
        expect(Tok::Prime, "after clock name in rate");
        expect(Tok::EqEq, "in rate declaration");
        r.rate = expression(false);
        l.rates.push_back(std::move(r));
      } else if (is_kw("exprate")) {
        next();
        if (l.exp_rate) fail("duplicate exprate");
        l.exp_rate = expression(false);
      } else {
        fail("expected 'invariant', 'rate' or 'exprate'");
      }
      expect(Tok::Semi, "after location attribute");
    }
    return l;
  }

  // Attributes shared by simple edges and branch arms.
  void edge_attrs(EdgeDecl* e, BranchDecl& b, bool allow_head, bool allow_branch) {
    while (!at(Tok::RBrace) && !(allow_head && at(Tok::Arrow))) {
      const SourcePos p = cur().pos;
      if (allow_head && is_kw("guard")) {
        next();
        if (e->guard) throw ParseError(p, "duplicate guard");
        e->guard = expression(false);
      } else if (allow_head && is_kw("sync")) {
        next();
        e->channel = ident("channel name");
        if (accept(Tok::Bang)) e->sync = SyncKind::Output;
        else if (accept(Tok::Question)) e->sync = SyncKind::Input;
        else fail("expected '!' or '?' after channel");
      } else if (allow_branch && is_kw("weight")) {
        next();
        if (b.weight) throw ParseError(p, "duplicate weight");
        b.weight = expression(false);
      } else if (allow_branch && is_kw("update")) {
        next();
        do {
          AssignDecl a;
          a.pos = cur().pos;
          a.target = ident("assignment target");
          expect(Tok::Assign, "in assignment");
          a.value = expression(false);
          b.updates.push_back(std::move(a));
        } while (accept(Tok::Comma));
      } else {
        fail(allow_head ? "expected 'guard', 'sync', 'weight' or 'update'"
                        : "expected 'weight' or 'update'");
      }
      expect(Tok::Semi, "after edge attribute");
    }
  }

  EdgeDecl edge_decl() {
    EdgeDecl e;
    e.pos = cur().pos;
    e.source = ident("source location");
    expect(Tok::Arrow, "after source location");
    if (at(Tok::Ident)) {
      BranchDecl b;
      b.pos = cur().pos;
      b.target = ident("target location");
      expect(Tok::LBrace, "to open edge body");
      edge_attrs(&e, b, true, true);
      expect(Tok::RBrace, "to close edge body");
      e.branches.push_back(std::move(b));
      return e;
    }
    expect(Tok::LBrace, "or target location after '->'");
    e.branching = true;
    BranchDecl unused;
    edge_attrs(&e, unused, true, false);
    while (accept(Tok::Arrow)) {
      BranchDecl b;
      b.pos = cur().pos;
      b.target = ident("branch target");
      expect(Tok::LBrace, "to open branch body");
      edge_attrs(nullptr, b, false, true);
      expect(Tok::RBrace, "to close branch body");
      e.branches.push_back(std::move(b));
    }
    if (e.branches.empty()) fail("expected at least one '-> target { }' branch");
    expect(Tok::RBrace, "to close branching edge");
    return e;
  }

  InstanceDecl instance_decl() {
    InstanceDecl i;
    i.pos = cur().pos;
    i.name = ident("instance name");
    expect(Tok::Assign, "after instance name");
    i.template_name = ident("template name");
    expect(Tok::LParen, "after template name");
    if (!at(Tok::RParen)) {
      do i.args.push_back(expression(false));
      while (accept(Tok::Comma));
    }
    expect(Tok::RParen, "after template arguments");
    expect(Tok::Semi, "after instance declaration");
    return i;
  }

  void system_line(ModelAst& m) {
    m.system_pos = cur().pos;
    next();
    if (accept(Tok::Semi)) return;
    do {
      const SourcePos p = cur().pos;
      std::string name = ident("instance or template name");
      if (accept(Tok::LParen)) {
        InstanceDecl i;
        i.pos = p;
        i.template_name = name;
        i.inline_decl = true;
        std::string key = name + "(";
        if (!at(Tok::RParen)) {
          do {
            auto e = expression(false);
            if (key.back() != '(') key += ",";
            key += to_string(e);
            i.args.push_back(std::move(e));
          } while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "after template arguments");
        i.name = key + ")";
        m.instances.push_back(std::move(i));
        m.system.push_back(m.instances.back().name);
      } else {
        m.system.push_back(std::move(name));
      }
    } while (accept(Tok::Comma));
    expect(Tok::Semi, "after system line");
  }

  // ---- query pieces ----------------------------------------------------------

  double signed_number() {
    const bool neg = accept(Tok::Minus);
    if (!at(Tok::Number)) fail("expected a number");
    const double v = next().number;
    return neg ? -v : v;
  }

  int positive_int(const char* what) {
    const Token& t = cur();
    if (!at(Tok::Number) || !t.integral) fail(std::string("expected an integer ") + what);
    next();
    if (t.number < 1) throw ParseError(t.pos, std::string(what) + " must be at least 1");
    if (t.number > 2e9) throw ParseError(t.pos, std::string(what) + " is too large");
    return static_cast<int>(t.number);
  }

  double bound_limit() {
    const Token& t = cur();
    const double m = signed_number();
    if (!(m > 0.0)) throw ParseError(t.pos, "run bound must be positive");
    return m;
  }

  RunBound bound_spec() {
    RunBound b;
    if (accept(Tok::Le)) {
      b.kind = BoundKind::Time;
    } else if (accept(Tok::Hash)) {
      expect(Tok::Le, "after '#'");
      b.kind = BoundKind::Steps;
    } else if (at(Tok::Ident)) {
      b.kind = BoundKind::Cost;
      b.clock = qualified_name();
      expect(Tok::Le, "after bound clock");
    } else {
      fail("expected '<=M', '#<=M' or 'clock<=M'");
    }
    b.limit = bound_limit();
    return b;
  }

  RunBound bound_in_brackets() {
    expect(Tok::LBracket, "before the run bound");
    auto b = bound_spec();
    expect(Tok::RBracket, "after the run bound");
    return b;
  }

  Expr parenthesized_formula() {
    expect(Tok::LParen, "before the path formula");
    auto f = expression(true);
    expect(Tok::RParen, "after the path formula");
    return f;
  }

  // `a`, `T.T3`, `Train(0).Cross`
  std::string qualified_name() {
    std::string name = ident("name");
    if (at(Tok::LParen) && instance_call_ahead()) {
      next();
      name += "(";
      bool first = true;
      while (!at(Tok::RParen)) {
        if (!first) expect(Tok::Comma, "between instance arguments");
        auto e = expression(false);
        name += (first ? "" : ",") + to_string(e);
        first = false;
      }
      next();
      name += ")";
    }
    while (at(Tok::Dot)) {
      next();
      name += "." + ident("name after '.'");
    }
    return name;
  }

  // Distinguishes `Train(0).Cross` from a parenthesized expression.
  bool instance_call_ahead() const {
    int depth = 0;
    for (std::size_t k = pos_; k < toks_.size(); ++k) {
      if (toks_[k].kind == Tok::LParen) ++depth;
      else if (toks_[k].kind == Tok::RParen && --depth == 0)
        return k + 1 < toks_.size() && toks_[k + 1].kind == Tok::Dot;
      else if (toks_[k].kind == Tok::End) return false;
    }
    return false;
  }

  // ---- expressions -----------------------------------------------------------

  Expr expression(bool temporal) {
    const bool saved = temporal_;
    temporal_ = temporal;
    auto e = temporal ? until_expr() : ternary();
    temporal_ = saved;
    return e;
  }

  struct TemporalBound {
    bool bounded = false;
    std::string clock;
    double limit = kInfinity;
  };

  TemporalBound temporal_bound() {
    TemporalBound b;
    if (!accept(Tok::LBracket)) return b;
    b.bounded = true;
    b.clock = qualified_name();
    expect(Tok::Le, "in temporal bound");
    const Token& t = cur();
    b.limit = signed_number();
    if (b.limit < 0.0) throw ParseError(t.pos, "temporal bound must be non-negative");
    expect(Tok::RBracket, "after temporal bound");
    return b;
  }

  static Expr temporal_node(Op op, std::vector<Expr> args, const TemporalBound& b) {
    Node n;
    n.op = op;
    n.args = std::move(args);
    n.bounded = b.bounded;
    n.name = b.clock;
    n.value = b.bounded ? b.limit : kInfinity;
    return make_node(std::move(n));
  }

  Expr until_expr() {
    auto lhs = ternary();
    if (temporal_ && is_kw("U")) {
      next();
      auto b = temporal_bound();
      auto rhs = until_expr();
      return temporal_node(Op::TUntil, {lhs, rhs}, b);
    }
    return lhs;
  }

  Expr ternary() {
    auto c = imply();
    if (accept(Tok::Question)) {
      auto a = ternary();
      expect(Tok::Colon, "in conditional expression");
      auto b = ternary();
      return ite(c, a, b);
    }
    return c;
  }

  Expr imply() {
    auto l = disj();
    while (is_kw("imply")) {
      next();
      l = binary(Op::Imply, l, disj());
    }
    return l;
  }

  Expr disj() {
    auto l = conj();
    while (at(Tok::OrOr) || is_kw("or")) {
      next();
      l = binary(Op::Or, l, conj());
    }
    return l;
  }

  Expr conj() {
    auto l = comparison();
    while (at(Tok::AndAnd) || is_kw("and")) {
      next();
      l = binary(Op::And, l, comparison());
    }
    return l;
  }

  Expr comparison() {
    auto l = additive();
    static const std::pair<Tok, Op> ops[] = {{Tok::Lt, Op::Lt}, {Tok::Le, Op::Le},
                                             {Tok::Gt, Op::Gt}, {Tok::Ge, Op::Ge},
                                             {Tok::EqEq, Op::Eq}, {Tok::Ne, Op::Ne}};
    for (const auto& [t, op] : ops)
      if (at(t)) {
        next();
        return binary(op, l, additive());
      }
    return l;
  }

  Expr additive() {
    auto l = multiplicative();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      const Op op = next().kind == Tok::Plus ? Op::Add : Op::Sub;
      l = binary(op, l, multiplicative());
    }
    return l;
  }

  Expr multiplicative() {
    auto l = unary_expr();
    while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
      const Tok k = next().kind;
      const Op op = k == Tok::Star ? Op::Mul : k == Tok::Slash ? Op::Div : Op::Mod;
      l = binary(op, l, unary_expr());
    }
    return l;
  }

  Expr unary_expr() {
    if (accept(Tok::Minus)) {
      auto a = unary_expr();
      if (a->op == Op::Const && a->type != ValueType::Bool) return constant(-a->value, a->type);
      return unary(Op::Neg, a);
    }
    if (accept(Tok::Bang) || (is_kw("not") && (next(), true))) return unary(Op::Not, unary_expr());
    if (temporal_ && (at(Tok::Diamond) || at(Tok::Box))) {
      const Op op = next().kind == Tok::Diamond ? Op::TEventually : Op::TGlobally;
      auto b = temporal_bound();
      return temporal_node(op, {imply()}, b);
    }
    if (temporal_ && is_kw("next")) {
      next();
      return temporal_node(Op::TNext, {imply()}, TemporalBound{});
    }
    return primary();
  }

  Expr primary() {
    const Token& t = cur();
    if (at(Tok::Number)) {
      next();
      return constant(t.number, t.integral ? ValueType::Int : ValueType::Real);
    }
    if (accept(Tok::LParen)) {
      auto e = temporal_ ? until_expr() : ternary();
      expect(Tok::RParen, "to close '('");
      return e;
    }
    if (at(Tok::Ident)) {
      if (t.text == "true" || t.text == "false") {
        next();
        return bool_constant(t.text == "true");
      }
      if ((t.text == "min" || t.text == "max") && peek(1).kind == Tok::LParen) {
        next();
        next();
        auto a = ternary();
        expect(Tok::Comma, std::string("in ") + t.text + "()");
        auto b = ternary();
        expect(Tok::RParen, std::string("to close ") + t.text + "()");
        return binary(t.text == "min" ? Op::Min : Op::Max, a, b);
      }
      if (t.text == "abs" && peek(1).kind == Tok::LParen) {
        next();
        next();
        auto a = ternary();
        expect(Tok::RParen, "to close abs()");
        return unary(Op::Abs, a);
      }
      if (t.text == "U" && temporal_) fail("expected an operand before 'U'");
      return name_ref(qualified_name());
    }
    fail("expected an expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool temporal_ = false;
};

}  // namespace detail

/// Parses a model file. Throws ParseError with the offending position.
inline ModelAst parse_model(std::string_view text) { return detail::Parser(text).model(); }

/// Parses a query string. Throws ParseError with the offending position.
inline Query parse_query(std::string_view text) { return detail::Parser(text).query(); }

/// Parses a single (optionally temporal) expression.
inline Expr parse_expression(std::string_view text, bool temporal = false) {
  return detail::Parser(text).standalone_expression(temporal);
}

// ---- pretty printing ---------------------------------------------------------

namespace detail {

inline const char* type_name(DeclKind k) {
  switch (k) {
    case DeclKind::Int: return "int";
    case DeclKind::Double: return "double";
    case DeclKind::Bool: return "bool";
    case DeclKind::Clock: return "clock";
    case DeclKind::Chan: return "chan";
  }
  return "?";
}

inline void print_decl(std::string& out, const Decl& d, const std::string& indent) {
  out += indent;
  if (d.kind == DeclKind::Chan) {
    out += std::string(d.broadcast ? "broadcast " : "") + "chan " + d.name + ";\n";
    return;
  }
  if (d.is_const) out += "const ";
  out += std::string(type_name(d.kind)) + " " + d.name;
  if (d.init) out += " = " + to_string(d.init);
  out += ";\n";
}

inline void print_branch_body(std::string& out, const BranchDecl& b, const std::string& indent) {
  if (b.weight) out += indent + "weight " + to_string(b.weight) + ";\n";
  if (!b.updates.empty()) {
    out += indent + "update ";
    for (std::size_t i = 0; i < b.updates.size(); ++i) {
      if (i) out += ", ";
      out += b.updates[i].target + " = " + to_string(b.updates[i].value);
    }
    out += ";\n";
  }
}

}  // namespace detail

/// Canonical source text of a model; parse_model reads it back to the same tree.
inline std::string to_source(const ModelAst& m) {
  std::string out;
  for (const auto& d : m.globals) detail::print_decl(out, d, "");
  for (const auto& t : m.templates) {
    out += "\ntemplate " + t.name + "(";
    for (std::size_t i = 0; i < t.params.size(); ++i) {
      if (i) out += ", ";
      out += std::string("const ") + detail::type_name(t.params[i].kind) + " " + t.params[i].name;
    }
    out += ") {\n";
    for (const auto& d : t.decls) detail::print_decl(out, d, "  ");
    for (const auto& l : t.locations) {
      out += "  location " + l.name;
      if (!l.invariant && l.rates.empty() && !l.exp_rate) {
        out += ";\n";
        continue;
      }
      out += " {";
      if (l.invariant) out += " invariant " + to_string(l.invariant) + ";";
      for (const auto& r : l.rates) out += " rate " + r.clock + "' == " + to_string(r.rate) + ";";
      if (l.exp_rate) out += " exprate " + to_string(l.exp_rate) + ";";
      out += " }\n";
    }
    if (!t.initial.empty()) out += "  init " + t.initial + ";\n";
    for (const auto& e : t.edges) {
      std::string head;
      if (e.guard) head += "    guard " + to_string(e.guard) + ";\n";
      if (e.sync != SyncKind::Internal)
        head += "    sync " + e.channel + (e.sync == SyncKind::Output ? "!" : "?") + ";\n";
      if (!e.branching) {
        out += "  " + e.source + " -> " + e.branches.at(0).target + " {\n" + head;
        detail::print_branch_body(out, e.branches[0], "    ");
        out += "  }\n";
        continue;
      }
      out += "  " + e.source + " -> {\n" + head;
      for (const auto& b : e.branches) {
        out += "    -> " + b.target + " {\n";
        detail::print_branch_body(out, b, "      ");
        out += "    }\n";
      }
      out += "  }\n";
    }
    out += "}\n";
  }
  if (!m.instances.empty()) out += "\n";
  for (const auto& i : m.instances) {
    if (i.inline_decl) continue;
    out += i.name + " = " + i.template_name + "(";
    for (std::size_t k = 0; k < i.args.size(); ++k) {
      if (k) out += ", ";
      out += to_string(i.args[k]);
    }
    out += ");\n";
  }
  out += "\nsystem";
  for (std::size_t k = 0; k < m.system.size(); ++k) out += (k ? ", " : " ") + m.system[k];
  out += ";\n";
  return out;
}

}  // namespace nsmc
