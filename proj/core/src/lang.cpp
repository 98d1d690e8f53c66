#include "hytccp/lang.hpp"

#include <algorithm>
#include <functional>

#include "hytccp/errors.hpp"

namespace hytccp {

namespace {
AgentPtr mk(Agent a) { return std::make_shared<const Agent>(std::move(a)); }
}  // namespace

AgentPtr Agent::stop() { return mk(Agent{}); }

AgentPtr Agent::tell(Constraint c) {
  Agent a;
  a.kind = Kind::Tell;
  a.constraint = std::move(c);
  return mk(std::move(a));
}

AgentPtr Agent::parallel(AgentPtr l, AgentPtr r) {
  Agent a;
  a.kind = Kind::Parallel;
  a.left = std::move(l);
  a.right = std::move(r);
  return mk(std::move(a));
}

AgentPtr Agent::now(Constraint cond, AgentPtr then_branch, AgentPtr else_branch) {
  Agent a;
  a.kind = Kind::Now;
  a.constraint = std::move(cond);
  a.left = std::move(then_branch);
  a.right = std::move(else_branch);
  return mk(std::move(a));
}

AgentPtr Agent::hide(std::string var, AgentPtr body) {
  return hide_with(std::move(var), std::move(body), HybridStore{});
}

AgentPtr Agent::hide_with(std::string var, AgentPtr body, HybridStore local) {
  Agent a;
  a.kind = Kind::Hide;
  a.name = std::move(var);
  a.body = std::move(body);
  a.local = std::move(local);
  return mk(std::move(a));
}

AgentPtr Agent::call(std::string name, std::vector<std::string> args) {
  Agent a;
  a.kind = Kind::Call;
  a.name = std::move(name);
  a.args = std::move(args);
  return mk(std::move(a));
}

AgentPtr Agent::change(std::string var, std::optional<Rat> value, std::optional<Rat> flow) {
  Agent a;
  a.kind = Kind::Change;
  a.name = std::move(var);
  a.value = std::move(value);
  a.flow = std::move(flow);
  return mk(std::move(a));
}

AgentPtr Agent::choice(std::vector<AskBranch> asks, std::vector<Constraint> invariants) {
  Agent a;
  a.kind = Kind::Choice;
  a.asks = std::move(asks);
  a.invariants = std::move(invariants);
  return mk(std::move(a));
}

bool agents_equal(const AgentPtr& a, const AgentPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Agent::Kind::Stop:
      return true;
    case Agent::Kind::Tell:
      return a->constraint == b->constraint;
    case Agent::Kind::Parallel:
      return agents_equal(a->left, b->left) && agents_equal(a->right, b->right);
    case Agent::Kind::Now:
      return a->constraint == b->constraint && agents_equal(a->left, b->left) &&
             agents_equal(a->right, b->right);
    case Agent::Kind::Hide:
      return a->name == b->name && a->local == b->local && agents_equal(a->body, b->body);
    case Agent::Kind::Call:
      return a->name == b->name && a->args == b->args;
    case Agent::Kind::Change:
      return a->name == b->name && a->value == b->value && a->flow == b->flow;
    case Agent::Kind::Choice: {
      if (a->asks.size() != b->asks.size() || a->invariants.size() != b->invariants.size())
        return false;
      for (size_t i = 0; i < a->asks.size(); ++i)
        if (!(a->asks[i].guard == b->asks[i].guard) ||
            !agents_equal(a->asks[i].body, b->asks[i].body))
          return false;
      for (size_t i = 0; i < a->invariants.size(); ++i)
        if (!(a->invariants[i] == b->invariants[i])) return false;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Name, Var, Number, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
};

[[noreturn]] void fail(const Token& t, const std::string& msg) {
  throw ParseError(msg, t.line, t.col);
}

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto bump = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < src.size()) {
    char ch = src[i];
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      bump(1);
      continue;
    }
    if (ch == '%') {
      while (i < src.size() && src[i] != '\n') bump(1);
      continue;
    }
    int tl = line, tc = col;
    auto push = [&](Tok k, std::string text) {
      out.push_back({k, std::move(text), tl, tc});
    };
    if (isdigit((unsigned char)ch)) {
      size_t j = i;
      while (j < src.size() && isdigit((unsigned char)src[j])) ++j;
      if (j + 1 < src.size() && src[j] == '.' && isdigit((unsigned char)src[j + 1])) {
        ++j;
        while (j < src.size() && isdigit((unsigned char)src[j])) ++j;
      }
      push(Tok::Number, src.substr(i, j - i));
      bump(j - i);
      continue;
    }
    if (isalpha((unsigned char)ch) || ch == '_') {
      size_t j = i;
      while (j < src.size() && (isalnum((unsigned char)src[j]) || src[j] == '_')) ++j;
      std::string word = src.substr(i, j - i);
      bool var = isupper((unsigned char)ch) || ch == '_';
      push(var ? Tok::Var : Tok::Name, word);
      bump(j - i);
      continue;
    }
    auto two = [&](const char* p) {
      return i + 1 < src.size() && src[i] == p[0] && src[i + 1] == p[1];
    };
    if (two(":-") || two("->") || two("||") || two("/\\") || two("!=") || two("=<") ||
        two("<=") || two(">=")) {
      push(Tok::Punct, src.substr(i, 2));
      bump(2);
      continue;
    }
    if (std::string("()[],|.+-*/=<>").find(ch) != std::string::npos) {
      push(Tok::Punct, std::string(1, ch));
      bump(1);
      continue;
    }
    throw ParseError(std::string("unexpected character '") + ch + "'", line, col);
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

// Continuous names are known before the real parse: collect cvar lists and
// change targets in one scan so variable kinds are right on first use.
std::set<std::string> scan_continuous(const std::vector<Token>& toks) {
  std::set<std::string> cont;
  for (size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].kind != Tok::Name) continue;
    if (toks[i].text == "cvar") {
      size_t j = i + 1;
      while (j < toks.size() && toks[j].kind == Tok::Var) {
        cont.insert(toks[j].text);
        ++j;
        if (j < toks.size() && toks[j].kind == Tok::Punct && toks[j].text == ",")
          ++j;
        else
          break;
      }
    } else if (toks[i].text == "change") {
      if (toks[i + 1].kind == Tok::Punct && toks[i + 1].text == "(" && i + 2 < toks.size() &&
          toks[i + 2].kind == Tok::Var)
        cont.insert(toks[i + 2].text);
    }
  }
  return cont;
}

// ---------------------------------------------------------------------------
// Parser

// Linear expression or plain term, decided as the atom's operators demand.
struct ExprVal {
  bool linear = false;
  std::vector<std::pair<std::string, Rat>> coeffs;
  Rat constant{0};
  TermPtr term;  // set when !linear
};

class Parser {
public:
  Parser(std::vector<Token> toks, std::set<std::string> continuous)
      : toks_(std::move(toks)), continuous_(std::move(continuous)) {}

  Program parse_program() {
    Program p;
    p.continuous = continuous_;
    while (!at_end()) {
      if (at_name("cvar")) {
        next();
        expect(Tok::Var, "variable name");
        while (at_punct(",")) {
          next();
          expect(Tok::Var, "variable name");
        }
        expect_punct(".");
        continue;
      }
      Token head = expect(Tok::Name, "declaration name");
      if (p.declarations.count(head.text))
        fail(head, "process " + head.text + " declared twice");
      std::vector<std::string> params;
      if (at_punct("(")) {
        next();
        if (!at_punct(")")) {
          for (;;) {
            Token v = expect(Tok::Var, "parameter variable");
            if (std::find(params.begin(), params.end(), v.text) != params.end())
              fail(v, "duplicate parameter " + v.text);
            params.push_back(v.text);
            if (!at_punct(",")) break;
            next();
          }
        }
        expect_punct(")");
      }
      expect_punct(":-");
      AgentPtr body = parse_agent();
      expect_punct(".");
      p.declarations.emplace(head.text, Declaration{std::move(params), std::move(body)});
    }
    for (auto& [name, arity, line, col] : calls_) {
      auto it = p.declarations.find(name);
      if (it == p.declarations.end()) throw UnboundProcessError(name, line, col);
      if (it->second.params.size() != arity)
        throw ArityMismatchError(name, it->second.params.size(), arity, line, col);
    }
    auto init = p.declarations.find("init");
    if (init != p.declarations.end() && init->second.params.empty())
      p.entry = Agent::call("init", {});
    return p;
  }

  AgentPtr parse_agent_only(const Program& context) {
    AgentPtr a = parse_agent();
    expect(Tok::End, "end of input");
    for (auto& [name, arity, line, col] : calls_) {
      auto it = context.declarations.find(name);
      if (it == context.declarations.end()) throw UnboundProcessError(name, line, col);
      if (it->second.params.size() != arity)
        throw ArityMismatchError(name, it->second.params.size(), arity, line, col);
    }
    return a;
  }

  Constraint parse_constraint_only() {
    Constraint c = parse_constraint();
    expect(Tok::End, "end of input");
    return c;
  }

private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::set<std::string> continuous_;
  std::vector<std::tuple<std::string, size_t, int, int>> calls_;

  const Token& peek(size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Tok::End; }
  bool at_punct(const char* p) const {
    return peek().kind == Tok::Punct && peek().text == p;
  }
  bool at_name(const char* n) const {
    return peek().kind == Tok::Name && peek().text == n;
  }
  Token expect(Tok k, const std::string& what) {
    if (peek().kind != k) fail(peek(), "expected " + what);
    return next();
  }
  Token expect_punct(const std::string& p) {
    if (!(peek().kind == Tok::Punct && peek().text == p)) fail(peek(), "expected '" + p + "'");
    return next();
  }
  static bool is_keyword(const std::string& w) {
    static const std::set<std::string> kw = {"stop", "tell",   "now",  "then",  "else", "ask",
                                             "cask", "change", "exists", "cvar", "true", "false"};
    return kw.count(w) > 0;
  }

  // ---- agents ----

  AgentPtr parse_agent() {
    AgentPtr a = parse_primary();
    while (at_punct("||")) {
      next();
      a = Agent::parallel(std::move(a), parse_primary());
    }
    return a;
  }

  AgentPtr parse_primary() {
    const Token& t = peek();
    if (t.kind == Tok::Punct && t.text == "(") {
      next();
      AgentPtr a = parse_agent();
      expect_punct(")");
      return a;
    }
    if (t.kind != Tok::Name) fail(t, "expected an agent");
    if (t.text == "stop") {
      next();
      return Agent::stop();
    }
    if (t.text == "tell") {
      next();
      expect_punct("(");
      Constraint c = parse_constraint();
      expect_punct(")");
      return Agent::tell(std::move(c));
    }
    if (t.text == "now") {
      next();
      Constraint c = parse_constraint();
      if (!at_name("then")) fail(peek(), "expected 'then'");
      next();
      AgentPtr th = parse_primary();
      if (!at_name("else")) fail(peek(), "expected 'else'");
      next();
      AgentPtr el = parse_primary();
      return Agent::now(std::move(c), std::move(th), std::move(el));
    }
    if (t.text == "exists") {
      next();
      std::vector<std::string> vars;
      vars.push_back(expect(Tok::Var, "variable name").text);
      while (at_punct(",")) {
        next();
        vars.push_back(expect(Tok::Var, "variable name").text);
      }
      expect_punct("(");
      AgentPtr body = parse_agent();
      expect_punct(")");
      for (auto it = vars.rbegin(); it != vars.rend(); ++it)
        body = Agent::hide(*it, std::move(body));
      return body;
    }
    if (t.text == "change") {
      next();
      expect_punct("(");
      Token v = expect(Tok::Var, "continuous variable");
      expect_punct(",");
      std::optional<Rat> value = parse_rat_or_keep();
      expect_punct(",");
      std::optional<Rat> flow = parse_rat_or_keep();
      expect_punct(")");
      return Agent::change(v.text, std::move(value), std::move(flow));
    }
    if (t.text == "ask" || t.text == "cask") return parse_choice();
    if (is_keyword(t.text)) fail(t, "unexpected keyword " + t.text);
    // a call
    Token name = next();
    std::vector<std::string> args;
    if (at_punct("(")) {
      next();
      if (!at_punct(")")) {
        for (;;) {
          args.push_back(expect(Tok::Var, "argument variable").text);
          if (!at_punct(",")) break;
          next();
        }
      }
      expect_punct(")");
    }
    calls_.emplace_back(name.text, args.size(), name.line, name.col);
    return Agent::call(name.text, std::move(args));
  }

  AgentPtr parse_choice() {
    std::vector<AskBranch> asks;
    std::vector<Constraint> invariants;
    for (;;) {
      if (at_name("ask")) {
        next();
        expect_punct("(");
        Constraint g = parse_constraint();
        expect_punct(")");
        expect_punct("->");
        AgentPtr body = parse_primary();
        asks.push_back({std::move(g), std::move(body)});
      } else if (at_name("cask")) {
        next();
        expect_punct("(");
        invariants.push_back(parse_constraint());
        expect_punct(")");
      } else {
        fail(peek(), "expected 'ask' or 'cask' branch");
      }
      if (!at_punct("+")) break;
      next();
    }
    return Agent::choice(std::move(asks), std::move(invariants));
  }

  std::optional<Rat> parse_rat_or_keep() {
    if (peek().kind == Tok::Var && peek().text == "_") {
      next();
      return std::nullopt;
    }
    return parse_rat();
  }

  Rat parse_rat() {
    bool neg = false;
    if (at_punct("-")) {
      next();
      neg = true;
    } else if (at_punct("+")) {
      next();
    }
    Token n = expect(Tok::Number, "number");
    Rat r = *rat_from_string(n.text);
    if (at_punct("/")) {
      next();
      Token d = expect(Tok::Number, "denominator");
      Rat den = *rat_from_string(d.text);
      if (den == 0) fail(d, "zero denominator");
      r /= den;
    }
    return neg ? Rat(-r) : r;
  }

  // ---- constraints ----

  // Placeholders shared across the atoms of one constraint parse as reserved
  // named variables (illegal in surface syntax) and are hidden at the end,
  // which turns them into proper constraint-level anons.
  struct CScope {
    std::map<std::string, std::string> shared;  // "_1" -> reserved name
    std::vector<std::string> hide_order;
  };

  // Placeholder context for one disequation atom: the names that end up in
  // pattern_vars plus the atom-local sharing map for "_x"-style words.
  struct PatScope {
    std::set<std::string> names;
    std::map<std::string, std::string> by_word;
  };

  Constraint parse_constraint() {
    CScope scope;
    Constraint c;
    for (;;) {
      c = conjoin(c, parse_atom(scope));
      if (!at_punct("/\\")) break;
      next();
    }
    for (auto& name : scope.hide_order) c = hide(name, c);
    return c;
  }

  Constraint parse_atom(CScope& scope) {
    if (at_name("true")) {
      next();
      return Constraint();
    }
    if (at_name("false")) {
      next();
      return Constraint::falsity();
    }
    Token start = peek();
    size_t save = pos_;
    ExprVal lhs = parse_expr(scope, nullptr);

    static const std::set<std::string> relops = {"=", "=<", "<=", "<", ">=", ">"};
    if (at_punct("!=")) {
      // Bare placeholders in a disequation are atom-local patterns, and that
      // also covers the left side, parsed before "!=" was visible: rewind and
      // parse it again under the pattern scope.
      pos_ = save;
      PatScope ps;
      ExprVal lv = parse_expr(scope, &ps);
      expect_punct("!=");
      if (lv.linear) fail(start, "disequations relate terms, not arithmetic");
      ExprVal rv = parse_expr(scope, &ps);
      if (rv.linear) fail(start, "disequations relate terms, not arithmetic");
      check_no_continuous(start, lv.term);
      check_no_continuous(start, rv.term);
      return Constraint::neq(lv.term, rv.term, ps.names);
    }
    if (peek().kind == Tok::Punct && relops.count(peek().text)) {
      std::string op = next().text;
      ExprVal rhs = parse_expr(scope, nullptr);
      if (op == "=") {
        bool numeric = lhs.linear || rhs.linear || is_numericish_side(lhs) ||
                       is_numericish_side(rhs);
        if (!numeric) {
          check_term_kinds(start, lhs.term);
          check_term_kinds(start, rhs.term);
          return Constraint::eq(lhs.term, rhs.term);
        }
        // numeric because of a continuous variable, yet the other side is
        // structural: a kind clash, not an arithmetic slip
        auto structural = [](const ExprVal& e) {
          return !e.linear && e.term->kind() != Term::Kind::Num &&
                 e.term->kind() != Term::Kind::Var;
        };
        auto cont_name = [](const ExprVal& e) -> std::string {
          if (!e.linear && e.term->kind() == Term::Kind::Var &&
              e.term->var_ref().kind == VarKind::Continuous)
            return e.term->var_ref().name;
          return "";
        };
        if (structural(lhs) || structural(rhs)) {
          std::string cn = cont_name(lhs);
          if (cn.empty()) cn = cont_name(rhs);
          if (!cn.empty()) throw KindClashError(cn, start.line, start.col);
        }
      }
      to_linear(start, lhs);
      to_linear(start, rhs);
      // lhs - rhs  REL  0
      std::vector<std::pair<std::string, Rat>> terms = lhs.coeffs;
      for (auto& [v, k] : rhs.coeffs) terms.emplace_back(v, -k);
      Rat rhs_const = rhs.constant - lhs.constant;
      Rel rel;
      if (op == "=") {
        rel = Rel::Eq;
      } else if (op == "<" || op == ">") {
        rel = Rel::Lt;
      } else {
        rel = Rel::Le;
      }
      if (op == ">" || op == ">=") {
        for (auto& [v, k] : terms) k = -k;
        rhs_const = -rhs_const;
      }
      return Constraint::lin(make_row(std::move(terms), std::move(rhs_const), rel));
    }
    // no relation: a bare signal
    if (!lhs.linear && lhs.term->kind() == Term::Kind::Sym) {
      return Constraint::signal(lhs.term->sym_name());
    }
    fail(peek(), "expected a relation");
  }

  bool is_numericish_side(const ExprVal& e) {
    if (e.linear) return true;
    if (e.term->kind() == Term::Kind::Num) return true;
    if (e.term->kind() == Term::Kind::Var)
      return e.term->var_ref().kind == VarKind::Continuous;
    return false;
  }

  void to_linear(const Token& at, ExprVal& e) {
    if (e.linear) return;
    e.linear = true;
    switch (e.term->kind()) {
      case Term::Kind::Num:
        e.constant = e.term->num_value();
        break;
      case Term::Kind::Var:
        e.coeffs.emplace_back(e.term->var_ref().name, Rat(1));
        break;
      default:
        fail(at, "arithmetic over a non-numeric term");
    }
    e.term = nullptr;
  }

  // continuous variables never live inside term structure
  void check_term_kinds(const Token& at, const TermPtr& t, bool inside = false) {
    switch (t->kind()) {
      case Term::Kind::Var:
        if (inside && t->var_ref().kind == VarKind::Continuous)
          throw KindClashError(t->var_ref().name, at.line, at.col);
        break;
      case Term::Kind::Cell:
        check_term_kinds(at, t->head(), true);
        check_term_kinds(at, t->tail(), true);
        break;
      default:
        break;
    }
  }

  // disequations are pure term territory; a continuous variable anywhere in
  // one is a kind clash
  void check_no_continuous(const Token& at, const TermPtr& t) {
    check_term_kinds(at, t, true);
  }

  ExprVal parse_expr(CScope& scope, PatScope* patterns) {
    ExprVal acc = parse_product(scope, patterns);
    while (at_punct("+") || at_punct("-")) {
      Token op = next();
      ExprVal r = parse_product(scope, patterns);
      to_linear(op, acc);
      to_linear(op, r);
      Rat sign = op.text == "+" ? 1 : -1;
      for (auto& [v, k] : r.coeffs) acc.coeffs.emplace_back(v, sign * k);
      acc.constant += sign * r.constant;
    }
    return acc;
  }

  ExprVal parse_product(CScope& scope, PatScope* patterns) {
    ExprVal acc = parse_leaf(scope, patterns);
    while (at_punct("*")) {
      Token op = next();
      ExprVal r = parse_leaf(scope, patterns);
      to_linear(op, acc);
      to_linear(op, r);
      const bool acc_const = acc.coeffs.empty();
      const bool r_const = r.coeffs.empty();
      if (!acc_const && !r_const) fail(op, "nonlinear product");
      ExprVal out;
      out.linear = true;
      const ExprVal& scaled = acc_const ? r : acc;
      const Rat& factor = acc_const ? acc.constant : r.constant;
      out.constant = scaled.constant * factor;
      for (auto& [v, k] : scaled.coeffs) out.coeffs.emplace_back(v, k * factor);
      acc = std::move(out);
    }
    return acc;
  }

  ExprVal parse_leaf(CScope& scope, PatScope* patterns) {
    ExprVal out;
    const Token& t = peek();
    if (t.kind == Tok::Punct && t.text == "-") {
      Token op = next();
      ExprVal v = parse_leaf(scope, patterns);
      to_linear(op, v);
      for (auto& [name, k] : v.coeffs) k = -k;
      v.constant = -v.constant;
      return v;
    }
    if (t.kind == Tok::Punct && t.text == "(") {
      next();
      ExprVal v = parse_expr(scope, patterns);
      expect_punct(")");
      return v;
    }
    if (t.kind == Tok::Number) {
      next();
      Rat r = *rat_from_string(t.text);
      if (at_punct("/")) {
        next();
        Token d = expect(Tok::Number, "denominator");
        Rat den = *rat_from_string(d.text);
        if (den == 0) fail(d, "zero denominator");
        r /= den;
      }
      out.term = Term::num(std::move(r));
      return out;
    }
    if (t.kind == Tok::Var) {
      next();
      out.term = make_var(t, scope, patterns);
      return out;
    }
    if (t.kind == Tok::Punct && t.text == "[") {
      out.term = parse_list(scope, patterns);
      return out;
    }
    if (t.kind == Tok::Name && !is_keyword(t.text)) {
      next();
      out.term = Term::sym(t.text);
      return out;
    }
    fail(t, "expected a term");
  }

  TermPtr make_var(const Token& t, CScope& scope, PatScope* patterns) {
    const std::string& w = t.text;
    if (w[0] != '_') {
      VarKind k = continuous_.count(w) ? VarKind::Continuous : VarKind::Discrete;
      return Term::var(VarRef{w, k, false});
    }
    if (w == "_") {
      std::string name = fresh_anon_name();
      if (patterns) patterns->names.insert(name);
      return Term::var(VarRef{name, VarKind::Discrete, true});
    }
    bool digits = w.size() > 1 && isdigit((unsigned char)w[1]);
    if (!digits && patterns) {
      // letter-named placeholder inside a disequation: shared within the
      // atom, fresh across atoms
      auto it = patterns->by_word.find(w);
      if (it == patterns->by_word.end()) {
        std::string name = fresh_anon_name();
        patterns->names.insert(name);
        patterns->by_word.emplace(w, name);
        return Term::var(VarRef{name, VarKind::Discrete, true});
      }
      return Term::var(VarRef{it->second, VarKind::Discrete, true});
    }
    // digit-named (or outside a disequation): shared existential across the
    // whole constraint; parsed as a reserved named variable and hidden after
    // the last atom
    auto it = scope.shared.find(w);
    if (it == scope.shared.end()) {
      std::string reserved = "!" + w;
      scope.shared.emplace(w, reserved);
      scope.hide_order.push_back(reserved);
      return Term::var(VarRef{reserved, VarKind::Discrete, false});
    }
    return Term::var(VarRef{it->second, VarKind::Discrete, false});
  }

  TermPtr parse_list(CScope& scope, PatScope* patterns) {
    expect_punct("[");
    if (at_punct("]")) {
      next();
      return Term::nil();
    }
    std::vector<TermPtr> heads;
    heads.push_back(parse_list_elem(scope, patterns));
    while (at_punct(",")) {
      next();
      heads.push_back(parse_list_elem(scope, patterns));
    }
    TermPtr tail = Term::nil();
    if (at_punct("|")) {
      next();
      tail = parse_list_elem(scope, patterns);
    }
    expect_punct("]");
    for (auto it = heads.rbegin(); it != heads.rend(); ++it)
      tail = Term::cell(*it, std::move(tail));
    return tail;
  }

  TermPtr parse_list_elem(CScope& scope, PatScope* patterns) {
    Token at = peek();
    ExprVal v = parse_expr(scope, patterns);
    if (!v.linear) return v.term;
    if (v.coeffs.empty()) return Term::num(v.constant);  // e.g. a negated number
    fail(at, "lists hold terms, not arithmetic");
  }
};

}  // namespace

Program parse_program(const std::string& source) {
  std::vector<Token> toks = lex(source);
  Parser p(toks, scan_continuous(toks));
  return p.parse_program();
}

Constraint parse_constraint_text(const std::string& source,
                                 const std::set<std::string>& continuous) {
  Parser p(lex(source), continuous);
  return p.parse_constraint_only();
}

AgentPtr parse_agent_text(const std::string& source, const Program& context) {
  std::vector<Token> toks = lex(source);
  std::set<std::string> cont = context.continuous;
  auto more = scan_continuous(toks);
  cont.insert(more.begin(), more.end());
  Parser p(std::move(toks), std::move(cont));
  return p.parse_agent_only(context);
}

// ---------------------------------------------------------------------------
// Pretty-printing

std::string pretty_constraint(const Constraint& c) {
  if (c.is_false()) return "false";
  auto atoms = display_atoms(c);
  if (atoms.empty()) return "true";
  std::string out;
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += " /\\ ";
    out += atoms[i];
  }
  return out;
}

namespace {

std::string render_agent(const AgentPtr& a);

// parenthesize where the grammar wants a primary
std::string render_child(const AgentPtr& a) {
  std::string s = render_agent(a);
  if (a->kind == Agent::Kind::Parallel || a->kind == Agent::Kind::Choice) return "(" + s + ")";
  return s;
}

std::string render_agent(const AgentPtr& a) {
  switch (a->kind) {
    case Agent::Kind::Stop:
      return "stop";
    case Agent::Kind::Tell:
      return "tell(" + pretty_constraint(a->constraint) + ")";
    case Agent::Kind::Parallel:
      return render_child(a->left) + " || " + render_child(a->right);
    case Agent::Kind::Now:
      return "now " + pretty_constraint(a->constraint) + " then " + render_child(a->left) +
             " else " + render_child(a->right);
    case Agent::Kind::Hide:
      return "exists " + a->name + " ( " + render_agent(a->body) + " )";
    case Agent::Kind::Call: {
      if (a->args.empty()) return a->name;
      std::string s = a->name + "(";
      for (size_t i = 0; i < a->args.size(); ++i) {
        if (i) s += ", ";
        s += a->args[i];
      }
      return s + ")";
    }
    case Agent::Kind::Change: {
      auto part = [](const std::optional<Rat>& r) {
        return r ? rat_to_string(*r) : std::string("_");
      };
      return "change(" + a->name + ", " + part(a->value) + ", " + part(a->flow) + ")";
    }
    case Agent::Kind::Choice: {
      std::string s;
      bool first = true;
      for (auto& br : a->asks) {
        if (!first) s += " + ";
        first = false;
        s += "ask(" + pretty_constraint(br.guard) + ") -> " + render_child(br.body);
      }
      for (auto& inv : a->invariants) {
        if (!first) s += " + ";
        first = false;
        s += "cask(" + pretty_constraint(inv) + ")";
      }
      return s;
    }
  }
  return "stop";
}

}  // namespace

std::string pretty_agent(const AgentPtr& a) { return render_agent(a); }

std::string pretty(const Program& p) {
  std::string out;
  if (!p.continuous.empty()) {
    out += "cvar ";
    bool first = true;
    for (auto& v : p.continuous) {
      if (!first) out += ", ";
      first = false;
      out += v;
    }
    out += ".\n\n";
  }
  for (auto& [name, decl] : p.declarations) {
    out += name;
    if (!decl.params.empty()) {
      out += "(";
      for (size_t i = 0; i < decl.params.size(); ++i) {
        if (i) out += ", ";
        out += decl.params[i];
      }
      out += ")";
    }
    out += " :-\n  " + render_agent(decl.body) + ".\n\n";
  }
  return out;
}

}  // namespace hytccp
