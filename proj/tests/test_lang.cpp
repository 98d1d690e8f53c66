#include <random>

#include "doctest.h"
#include "hytccp/errors.hpp"
#include "hytccp/lang.hpp"

using namespace hytccp;

namespace {

bool programs_equal(const Program& a, const Program& b) {
  if (a.continuous != b.continuous) return false;
  if ((a.entry == nullptr) != (b.entry == nullptr)) return false;
  if (a.entry && !agents_equal(a.entry, b.entry)) return false;
  if (a.declarations.size() != b.declarations.size()) return false;
  for (auto& [name, decl] : a.declarations) {
    auto it = b.declarations.find(name);
    if (it == b.declarations.end()) return false;
    if (decl.params != it->second.params) return false;
    if (!agents_equal(decl.body, it->second.body)) return false;
  }
  return true;
}

Program reparse(const Program& p) { return parse_program(pretty(p)); }

const char* kCooler = R"(
cvar T.

init :-
  exists St, T (
    tell(St = [off|_]) || change(T, 29, 2) || cooler(St, T)
  ).

cooler(St, T) :-
  exists St1 (
    ask(St = [off|St1]) -> (
      ( cask(T =< 30)
      + ask(T = 30) -> (tell(St1 = [on|_]) || change(T, _, -1/2))
      ) || resume(St, St1, T)
    )
  + ask(St = [on|St1]) -> (
      ( cask(T >= 26)
      + ask(T = 26) -> (tell(St1 = [off|_]) || change(T, _, 2))
      ) || resume(St, St1, T)
    )
  ).

resume(St, St1, T) :-
  ask(St1 != []) -> cooler(St1, T).
)";

}  // namespace

TEST_CASE("smallest program") {
  Program p = parse_program("init :- stop.");
  REQUIRE(p.declarations.size() == 1);
  auto& d = p.declarations.at("init");
  CHECK(d.params.empty());
  CHECK(d.body->kind == Agent::Kind::Stop);
  REQUIRE(p.entry != nullptr);
  CHECK(p.entry->kind == Agent::Kind::Call);
  CHECK(p.entry->name == "init");
  CHECK(p.entry->args.empty());
  CHECK(p.continuous.empty());
}

TEST_CASE("cooler program shape") {
  Program p = parse_program(kCooler);
  REQUIRE(p.declarations.size() == 3);
  CHECK(p.declarations.at("init").params.empty());
  CHECK(p.declarations.at("cooler").params == std::vector<std::string>{"St", "T"});
  CHECK(p.continuous == std::set<std::string>{"T"});
  REQUIRE(p.entry != nullptr);

  // body: exists St ( exists T ( tell || change || cooler ) )
  AgentPtr body = p.declarations.at("init").body;
  REQUIRE(body->kind == Agent::Kind::Hide);
  CHECK(body->name == "St");
  REQUIRE(body->body->kind == Agent::Kind::Hide);
  CHECK(body->body->name == "T");
  AgentPtr par = body->body->body;
  REQUIRE(par->kind == Agent::Kind::Parallel);

  // cooler: exists St1 ( two-branch choice )
  AgentPtr cb = p.declarations.at("cooler").body;
  REQUIRE(cb->kind == Agent::Kind::Hide);
  AgentPtr choice = cb->body;
  REQUIRE(choice->kind == Agent::Kind::Choice);
  REQUIRE(choice->asks.size() == 2);
  CHECK(choice->invariants.empty());

  // each branch body is (inner choice || resume); the inner choice has one
  // cask and one ask, in source order
  for (auto& br : choice->asks) {
    REQUIRE(br.body->kind == Agent::Kind::Parallel);
    AgentPtr inner = br.body->left;
    REQUIRE(inner->kind == Agent::Kind::Choice);
    CHECK(inner->asks.size() == 1);
    CHECK(inner->invariants.size() == 1);
    CHECK(br.body->right->kind == Agent::Kind::Call);
    CHECK(br.body->right->name == "resume");
  }
}

TEST_CASE("change keeps the flow reading") {
  Program p = parse_program("cvar T. init :- change(T, _, 5).");
  AgentPtr a = p.declarations.at("init").body;
  REQUIRE(a->kind == Agent::Kind::Change);
  CHECK(a->name == "T");
  CHECK(!a->value.has_value());
  REQUIRE(a->flow.has_value());
  CHECK(*a->flow == 5);
  CHECK(pretty_agent(a) == "change(T, _, 5)");

  Program q = parse_program("cvar T. init :- change(T, 30, -1/2).");
  AgentPtr b = q.declarations.at("init").body;
  REQUIRE(b->value.has_value());
  CHECK(*b->value == 30);
  CHECK(*b->flow == Rat(-1) / 2);
  CHECK(pretty_agent(b) == "change(T, 30, -1/2)");

  CHECK(pretty_agent(Agent::change("T", std::nullopt, Rat(5))) == "change(T, _, 5)");
}

TEST_CASE("call resolution errors") {
  SUBCASE("unbound process") {
    try {
      parse_program("init :- p(X).");
      FAIL("expected UnboundProcessError");
    } catch (const UnboundProcessError& e) {
      CHECK(e.name == "p");
      CHECK(e.line == 1);
      CHECK(e.col == 9);
    }
  }
  SUBCASE("arity mismatch") {
    try {
      parse_program("init :- q. q(X) :- stop.");
      FAIL("expected ArityMismatchError");
    } catch (const ArityMismatchError& e) {
      CHECK(e.name == "q");
      CHECK(e.want == 1);
      CHECK(e.got == 0);
    }
  }
  SUBCASE("forward reference is fine") {
    Program p = parse_program("init :- later. later :- stop.");
    CHECK(p.declarations.size() == 2);
  }
  SUBCASE("duplicate declaration") {
    CHECK_THROWS_AS(parse_program("init :- stop. init :- stop."), ParseError);
  }
}

TEST_CASE("syntax error positions are 1-based") {
  try {
    parse_program("% c\ninit :- \n  tell(X = ).");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(e.col == 12);
  }
  try {
    parse_program("init :- ask(X > 0) -> stop + .");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.col == 30);
  }
  CHECK_THROWS_AS(parse_program("init :- ."), ParseError);
  CHECK_THROWS_AS(parse_program("init :- stop"), ParseError);   // missing dot
  CHECK_THROWS_AS(parse_program("init :- cask(true) stop."), ParseError);
  CHECK_THROWS_AS(parse_program("init :- now true then stop."), ParseError);
  CHECK_THROWS_AS(parse_program("init :- tell(?)."), ParseError);
}

TEST_CASE("constraint classification") {
  Program ctx;
  SUBCASE("bare variables make a stream equation") {
    Constraint c = parse_constraint_text("X = Y");
    CHECK(c.linear().empty());
    CHECK(c.equations().size() == 1);
  }
  SUBCASE("a number on either side makes it linear") {
    Constraint c = parse_constraint_text("X = 5");
    CHECK(c.equations().empty());
    CHECK(c.linear().size() == 1);
    CHECK(c.pinned_value("X") == Rat(5));
  }
  SUBCASE("a continuous variable makes it linear") {
    Constraint c = parse_constraint_text("T = X", {"T"});
    CHECK(c.equations().empty());
    CHECK(c.linear().size() == 1);
  }
  SUBCASE("arithmetic folds exactly") {
    Constraint c = parse_constraint_text("2*X + 1 - X =< X + 7 - X");
    // x <= 6
    REQUIRE(c.linear().size() == 1);
    CHECK(!entails(c, parse_constraint_text("X < 6")));
    CHECK(entails(c, parse_constraint_text("X =< 6")));
    CHECK(entails(parse_constraint_text("X =< 6"), c));
  }
  SUBCASE("both comparison spellings") {
    CHECK(equivalent(parse_constraint_text("X =< 3"), parse_constraint_text("X <= 3")));
    CHECK(equivalent(parse_constraint_text("X >= 3 /\\ X =< 3"),
                     parse_constraint_text("X = 3")));
  }
  SUBCASE("strict directions") {
    Constraint c = parse_constraint_text("X > 2 /\\ X < 4");
    CHECK(entails(c, parse_constraint_text("X > 1")));
    CHECK(!entails(c, parse_constraint_text("X > 3")));
  }
  SUBCASE("rationals and decimals agree") {
    CHECK(equivalent(parse_constraint_text("X = 1/2"), parse_constraint_text("X = 0.5")));
    CHECK(equivalent(parse_constraint_text("X = -3/4"), parse_constraint_text("X = -0.75")));
  }
  SUBCASE("signals") {
    Constraint c = parse_constraint_text("go /\\ M = 50");
    CHECK(c.signals() == std::set<std::string>{"go"});
    CHECK(c.linear().size() == 1);
  }
  SUBCASE("stream equations and symbols") {
    Constraint c = parse_constraint_text("St = [off, on | U]");
    CHECK(display_atoms(c) == std::vector<std::string>{"St=[off,on|U]"});
    Constraint sym = parse_constraint_text("off = X");
    CHECK(display_atoms(sym) == std::vector<std::string>{"X=off"});
  }
  SUBCASE("ground rows collapse") {
    CHECK(parse_constraint_text("1 < 2").is_true());
    CHECK(parse_constraint_text("2 < 1").is_false());
    CHECK(parse_constraint_text("false").is_false());
    CHECK(parse_constraint_text("true").is_true());
  }
  SUBCASE("empty list and nested lists") {
    Constraint c = parse_constraint_text("X = [] /\\ Y = [[a], -2]");
    CHECK(c.equations().size() == 2);
  }
}

TEST_CASE("placeholder scoping") {
  SUBCASE("solitary underscore is existential") {
    Constraint c = parse_constraint_text("St = [off|_]");
    CHECK(display_atoms(c) == std::vector<std::string>{"St=[off|_]"});
  }
  SUBCASE("numbered placeholders are shared across atoms") {
    Constraint c = parse_constraint_text("X = [a|_1] /\\ Y = [b|_1]");
    CHECK(display_atoms(c) ==
          std::vector<std::string>{"X=[a|_1]", "Y=[b|_1]"});
    // and the sharing is semantic: X's tail and Y's tail are one variable
    Constraint d = parse_constraint_text("X = [a|_] /\\ Y = [b|_]");
    CHECK(display_atoms(d) == std::vector<std::string>{"X=[a|_]", "Y=[b|_]"});
    CHECK(entails(c, d));
    CHECK(!entails(d, c));
  }
  SUBCASE("patterns in a disequation are atom-local") {
    Constraint c = parse_constraint_text("St != [on|_]");
    REQUIRE(c.disequations().size() == 1);
    CHECK(c.disequations()[0].pattern_vars.size() == 1);
    CHECK(display_atoms(c) == std::vector<std::string>{"St!=[on|_]"});
  }
  SUBCASE("named patterns repeat inside their atom") {
    Constraint c = parse_constraint_text("X != [a, _p, _p | _]");
    REQUIRE(c.disequations().size() == 1);
    CHECK(c.disequations()[0].pattern_vars.size() == 2);
    CHECK(display_atoms(c) == std::vector<std::string>{"X!=[a,_a,_a|_]"});
  }
  SUBCASE("numbered placeholder reaches into a disequation as existential") {
    Constraint c = parse_constraint_text("X = [k|_1] /\\ Y != [j|_1]");
    REQUIRE(c.disequations().size() == 1);
    CHECK(c.disequations()[0].pattern_vars.empty());
  }
  SUBCASE("round-trip through display") {
    for (const char* src : {"St = [off|_]", "X = [a|_1] /\\ Y = [b|_1]",
                            "St != [on|_]", "X != [a,_p,_p|_]",
                            "W != [g1up|_] /\\ W = [_1|_2] /\\ M >= 0"}) {
      Constraint c = parse_constraint_text(src);
      Constraint back = parse_constraint_text(pretty_constraint(c));
      CHECK(equivalent(c, back));
      CHECK(pretty_constraint(back) == pretty_constraint(c));
    }
  }
}

TEST_CASE("kind discipline") {
  SUBCASE("continuous inside a cell") {
    try {
      parse_program("cvar T. init :- tell(X = [T|Y]).");
      FAIL("expected KindClashError");
    } catch (const KindClashError& e) {
      CHECK(e.name == "T");
    }
  }
  SUBCASE("continuous equated to structure") {
    CHECK_THROWS_AS(parse_program("cvar T. init :- tell(T = [a])."), KindClashError);
    CHECK_THROWS_AS(parse_program("cvar T. init :- tell(T = off)."), KindClashError);
  }
  SUBCASE("continuous in a disequation") {
    CHECK_THROWS_AS(parse_program("cvar T. init :- tell(T != [a])."), KindClashError);
  }
  SUBCASE("change target is continuous without a cvar line") {
    Program p = parse_program("init :- change(V, 0, 4) || tell(V >= 0).");
    CHECK(p.continuous == std::set<std::string>{"V"});
    CHECK(p.declarations.at("init").body->left->kind == Agent::Kind::Change);
  }
}

TEST_CASE("grammar precedence") {
  Program ctx = parse_program("p :- stop. q :- stop.");
  SUBCASE("parallel binds looser than now") {
    AgentPtr a = parse_agent_text("now go then stop else stop || p", ctx);
    REQUIRE(a->kind == Agent::Kind::Parallel);
    CHECK(a->left->kind == Agent::Kind::Now);
    CHECK(a->right->kind == Agent::Kind::Call);
  }
  SUBCASE("parallel is left associative") {
    AgentPtr a = parse_agent_text("p || q || stop", ctx);
    REQUIRE(a->kind == Agent::Kind::Parallel);
    CHECK(a->left->kind == Agent::Kind::Parallel);
    CHECK(a->right->kind == Agent::Kind::Stop);
  }
  SUBCASE("choice branches take primaries; parens compose") {
    AgentPtr a = parse_agent_text("ask(go) -> (p || q) + cask(X =< 5)", ctx);
    REQUIRE(a->kind == Agent::Kind::Choice);
    REQUIRE(a->asks.size() == 1);
    CHECK(a->asks[0].body->kind == Agent::Kind::Parallel);
    CHECK(a->invariants.size() == 1);
  }
  SUBCASE("choice inside parallel needs parens and keeps order") {
    AgentPtr a = parse_agent_text(
        "(ask(a) -> stop + ask(b) -> stop + cask(X > 0)) || stop", ctx);
    REQUIRE(a->kind == Agent::Kind::Parallel);
    const auto& ch = a->left;
    REQUIRE(ch->kind == Agent::Kind::Choice);
    REQUIRE(ch->asks.size() == 2);
    CHECK(pretty_constraint(ch->asks[0].guard) == "a");
    CHECK(pretty_constraint(ch->asks[1].guard) == "b");
  }
  SUBCASE("exists spans a full agent") {
    AgentPtr a = parse_agent_text("exists X, Y ( p || q )", ctx);
    REQUIRE(a->kind == Agent::Kind::Hide);
    CHECK(a->name == "X");
    REQUIRE(a->body->kind == Agent::Kind::Hide);
    CHECK(a->body->name == "Y");
    CHECK(a->body->body->kind == Agent::Kind::Parallel);
  }
  SUBCASE("unknown call in agent text") {
    CHECK_THROWS_AS(parse_agent_text("missing(X)", ctx), UnboundProcessError);
  }
}

TEST_CASE("pretty round-trips hand programs") {
  const char* programs[] = {
      "init :- stop.",
      kCooler,
      "init :- tell(go) || (ask(go) -> stop + cask(true)).",
      "cvar V. init :- now V >= 10 then change(V, 0, 1) else stop.",
      "p(X, Y) :- exists Z ( tell(X = [a|Z]) || p(Z, Y) ). init :- exists A, B ( p(A, B) ).",
      "init :- tell(X != [on, _p | _p2] /\\ X = [_1|_] /\\ _1 != off).",
  };
  for (const char* src : programs) {
    CAPTURE(src);
    Program p = parse_program(src);
    Program q = reparse(p);
    CHECK(programs_equal(p, q));
    CHECK(pretty(q) == pretty(p));
  }
}

namespace {

// Random grammar-shaped programs: every generated node is representable in
// the surface syntax, so parse(pretty(ast)) must reproduce the ast.
struct AstGen {
  std::mt19937_64 rng;
  explicit AstGen(uint64_t seed) : rng(seed) {}

  int pick(int n) { return static_cast<int>(rng() % n); }

  Constraint constraint() {
    switch (pick(7)) {
      case 0:
        return Constraint();
      case 1:
        return parse_constraint_text("X = [off|_]");
      case 2:
        return parse_constraint_text("X >= 2 /\\ X =< 9");
      case 3:
        return parse_constraint_text("St != [on|_]");
      case 4:
        return parse_constraint_text("go");
      case 5:
        return parse_constraint_text("Y = [a|_1] /\\ Z = [b|_1]");
      default:
        return parse_constraint_text("X = 5/2");
    }
  }

  AgentPtr agent(int depth) {
    if (depth <= 0) {
      switch (pick(4)) {
        case 0:
          return Agent::stop();
        case 1:
          return Agent::tell(constraint());
        case 2:
          return Agent::change("V", pick(2) ? std::optional<Rat>(Rat(pick(20)) - 6)
                                            : std::nullopt,
                               pick(2) ? std::optional<Rat>(Rat(pick(9)) / 4) : std::nullopt);
        default:
          return pick(2) ? Agent::call("p0", {}) : Agent::call("p2", {"X", "Y"});
      }
    }
    switch (pick(6)) {
      case 0:
        return Agent::parallel(agent(depth - 1), agent(depth - 1));
      case 1:
        return Agent::now(constraint(), agent(depth - 1), agent(depth - 1));
      case 2:
        return Agent::hide("H" + std::to_string(pick(3)), agent(depth - 1));
      case 3: {
        std::vector<AskBranch> asks;
        std::vector<Constraint> invs;
        int n = 1 + pick(3);
        for (int i = 0; i < n; ++i) asks.push_back({constraint(), agent(depth - 1)});
        int m = pick(2);
        for (int i = 0; i < m; ++i) invs.push_back(constraint());
        return Agent::choice(std::move(asks), std::move(invs));
      }
      case 4:
        return Agent::tell(constraint());
      default:
        return agent(depth - 1);
    }
  }

  Program program() {
    Program p;
    p.continuous = {"V"};
    p.declarations.emplace("p0", Declaration{{}, agent(1)});
    p.declarations.emplace("p2", Declaration{{"X", "Y"}, agent(2)});
    p.declarations.emplace("init", Declaration{{}, agent(3)});
    p.entry = Agent::call("init", {});
    return p;
  }
};

}  // namespace

TEST_CASE("pretty round-trips generated programs") {
  AstGen gen(20240817);
  for (int i = 0; i < 60; ++i) {
    Program p = gen.program();
    Program q = reparse(p);
    CHECK(programs_equal(p, q));
  }
}

TEST_CASE("entry wiring") {
  SUBCASE("no init means no entry") {
    Program p = parse_program("main :- stop.");
    CHECK(p.entry == nullptr);
  }
  SUBCASE("init with parameters is not an entry") {
    Program p = parse_program("init(X) :- stop.");
    CHECK(p.entry == nullptr);
  }
  SUBCASE("agents_equal distinguishes shapes") {
    CHECK(agents_equal(Agent::stop(), Agent::stop()));
    CHECK(!agents_equal(Agent::stop(), Agent::call("p", {})));
    CHECK(!agents_equal(Agent::change("T", Rat(1), std::nullopt),
                        Agent::change("T", std::nullopt, Rat(1))));
    CHECK(agents_equal(Agent::hide("X", Agent::stop()), Agent::hide("X", Agent::stop())));
    CHECK(!agents_equal(Agent::hide("X", Agent::stop()), Agent::hide("Y", Agent::stop())));
  }
}
