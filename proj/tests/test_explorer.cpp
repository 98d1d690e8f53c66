#include "doctest.h"
#include "hytccp/errors.hpp"
#include "hytccp/explorer.hpp"

using namespace hytccp;

namespace {

Constraint con(const std::string& text, const std::set<std::string>& cont = {}) {
  return parse_constraint_text(text, cont);
}

const char* kCoolerSrc = R"(
cvar T.

init :-
  tell(St = [off|_]) || change(T, 29, 2) || tell(T >= 26 /\ T =< 30) || cooler(St, T).

cooler(St, T) :-
  exists St1 (
    cask(St = [off|_] /\ T =< 30)
  + ask(St = [off|_] /\ T = 30) ->
      (tell(St = [off|St1]) || tell(St1 = [on|_]) || change(T, 30, -1/2) || cooler(St1, T))
  + cask(St = [on|_] /\ T >= 26)
  + ask(St = [on|_] /\ T = 26) ->
      (tell(St = [on|St1]) || tell(St1 = [off|_]) || change(T, 26, 2) || cooler(St1, T))
  ).
)";

const char* kCatMouseSrc = R"(
init :- mouse || cat || controller.

mouse :-
  exists M (
    change(M, 0, 10) ||
    ( cask(M =< 50)
    + ask(M = 50) -> (
        tell(go) ||
        ( cask(M =< 100)
        + ask(M = 100) -> (
            tell(end_m) ||
            ( ask(win_m) -> tell(prize_m)
            + ask(win_c) -> stop )
          )
        )
      )
    )
  ).

cat :-
  exists C (
    ask(go) -> (
      change(C, 0, 20) ||
      ( cask(C =< 100)
      + ask(C = 100) -> (
          tell(end_c) ||
          ( ask(win_c) -> tell(prize_c)
          + ask(win_m) -> stop )
        )
      )
    )
  ).

controller :-
  ask(end_m) -> tell(win_m)
+ ask(end_c) -> tell(win_c).
)";

HybridStore cooler_init() {
  HybridStore s{con("St = [off|_] /\\ T >= 26 /\\ T =< 30", {"T"}), {}};
  s.continuous.put("T", {Rat(29), Rat(2)});
  return s;
}

std::string label_summary(const Trace& t) {
  std::string out;
  for (auto& s : t.steps) {
    if (!out.empty()) out += " ";
    out += s.discrete ? "s" : "t=" + rat_to_string(s.tau);
  }
  return out;
}

std::string store_summary(const Trace& t) {
  std::string out = display_store(t.initial);
  for (auto& s : t.steps) {
    out += " . ";
    out += display_store(s.store);
  }
  return out;
}

// Cumulative time when the store first entails c, -1 if never.
Rat time_until(const Trace& t, const Constraint& c) {
  Rat elapsed(0);
  if (hentails(t.initial, c)) return elapsed;
  for (auto& s : t.steps) {
    if (!s.discrete) elapsed += s.tau;
    if (hentails(s.store, c)) return elapsed;
  }
  return Rat(-1);
}

}  // namespace

TEST_CASE("a stop entry runs to success in zero steps") {
  Program p = parse_program("init :- stop.");
  Trace t = run(p, {}, Policy::urgent(0));
  CHECK(t.steps.empty());
  CHECK(t.terminal == Terminal::Success);
  CHECK(t.total_time() == Rat(0));
  CHECK(check_trace(t).ok);
}

TEST_CASE("cooler under the urgent policy follows the published cycle") {
  Program p = parse_program(kCoolerSrc);
  AgentPtr entry = parse_agent_text("cooler(St, T)", p);
  Limits lim;
  lim.max_time = Rat(20);
  Trace t = run(p, cooler_init(), Policy::urgent(0), lim, entry);

  CHECK(label_summary(t) == "t=1/2 s s s t=8 s s s t=2 s s s t=8 s s s t=3/2");
  CHECK(t.terminal == Terminal::LimitReached);
  CHECK(t.total_time() == Rat(20));

  // heatup ends at 30 with the heater still off
  CHECK(t.steps[0].store.continuous.get("T").value == Rat(30));
  // guard evaluation changes nothing
  CHECK(display_store(t.steps[1].store) == display_store(t.steps[0].store));
  // the actions extend the state stream and turn the temperature around
  CHECK(entails(t.steps[2].store.discrete, con("St = [off, on | _]")));
  CHECK(t.steps[2].store.continuous.get("T").flow == Rat(-1, 2));
  // the recursive call is once more a step of its own
  CHECK(display_store(t.steps[3].store) == display_store(t.steps[2].store));
  // cooldown runs eight units to 26, then the second cycle begins
  CHECK(t.steps[4].store.continuous.get("T").value == Rat(26));
  CHECK(entails(t.steps[6].store.discrete, con("St = [off, on, off | _]")));
  CHECK(t.steps[6].store.continuous.get("T").flow == Rat(2));

  // nothing local ever leaks
  for (auto& s : t.steps)
    for (auto& v : s.store.discrete.named_vars()) CHECK(v.find('#') == std::string::npos);

  CHECK(check_trace(t).ok);

  SUBCASE("the trace is policy-deterministic, and seed-independent here") {
    Trace again = run(p, cooler_init(), Policy::urgent(0), lim, entry);
    CHECK(label_summary(again) == label_summary(t));
    CHECK(store_summary(again) == store_summary(t));
    Trace other_seed = run(p, cooler_init(), Policy::urgent(9), lim, entry);
    CHECK(store_summary(other_seed) == store_summary(t));
  }

  SUBCASE("lazy takes the same dwells when windows close at the events") {
    Trace lazy = run(p, cooler_init(), Policy::lazy(0), lim, entry);
    CHECK(store_summary(lazy) == store_summary(t));
  }
}

TEST_CASE("cat and mouse race under any urgent seed") {
  Program p = parse_program(kCatMouseSrc);
  for (uint64_t seed : {0ull, 1ull, 2ull}) {
    CAPTURE(seed);
    Trace t = run(p, {}, Policy::urgent(seed));
    CHECK(t.terminal == Terminal::Success);
    CHECK(t.steps.size() == 14);
    CHECK(t.total_time() == Rat(10));
    CHECK(time_until(t, con("go")) == Rat(5));
    CHECK(time_until(t, con("end_m /\\ end_c")) == Rat(10));
    bool m = hentails(t.final_store(), con("win_m /\\ prize_m"));
    bool c = hentails(t.final_store(), con("win_c /\\ prize_c"));
    CHECK(m != c);  // exactly one winner, and it got its prize
    CHECK(check_trace(t).ok);
    CHECK(check_trace(coalesce(t)).ok);
  }
}

TEST_CASE("run limits") {
  SUBCASE("an endless discrete loop trips the step guard") {
    Program p = parse_program("init :- p. p :- ask(true) -> p.");
    Limits lim;
    lim.max_steps = 50;
    Trace t = run(p, {}, Policy::urgent(0), lim);
    CHECK(t.terminal == Terminal::LimitReached);
    CHECK(t.steps.size() == 50);
    CHECK(t.total_time() == Rat(0));
  }

  SUBCASE("the time budget caps an endless dwell") {
    Program p = parse_program("cvar T. init :- change(T, 0, 1) || cask(true).");
    Limits lim;
    lim.max_time = Rat(7);
    Trace t = run(p, {}, Policy::urgent(0), lim);
    CHECK(t.terminal == Terminal::LimitReached);
    CHECK(t.total_time() == Rat(7));
    CHECK(t.final_store().continuous.get("T").value == Rat(7));
  }

  SUBCASE("an eventless endless dwell suspends") {
    Program p = parse_program("init :- cask(true).");
    Trace t = run(p, {}, Policy::urgent(0));
    CHECK(t.terminal == Terminal::Suspended);
    CHECK(t.steps.empty());
  }

  SUBCASE("lazy dwells to the budget, which cuts even pending actions") {
    Program p = parse_program("init :- ask(true) -> tell(a) + cask(true).");
    Limits lim;
    lim.max_time = Rat(5);
    Trace t = run(p, {}, Policy::lazy(0), lim);
    CHECK(t.terminal == Terminal::LimitReached);
    CHECK(t.total_time() == Rat(5));
    CHECK(label_summary(t) == "t=5");
    CHECK(!hentails(t.final_store(), con("a")));
  }
}

TEST_CASE("a clashing write ends the run as inconsistent") {
  Program p = parse_program("cvar X. init :- change(X, 0, 1) || change(X, 0, 2).");
  Trace t = run(p, {}, Policy::urgent(0));
  CHECK(t.terminal == Terminal::Inconsistent);
  CHECK(t.steps.size() == 1);
  CHECK(check_trace(t).ok);
}

TEST_CASE("random runs are reproducible and stay lawful") {
  Program p = parse_program(kCatMouseSrc);
  Trace a = run(p, {}, Policy::random(42, Rat(1)));
  Trace b = run(p, {}, Policy::random(42, Rat(1)));
  CHECK(label_summary(a) == label_summary(b));
  CHECK(store_summary(a) == store_summary(b));
  CHECK(check_trace(a).ok);
  CHECK_THROWS_AS(run(p, {}, Policy::random(1, Rat(0))), std::invalid_argument);
  CHECK_THROWS_AS(run(p, {}, Policy::exhaustive(5)), std::invalid_argument);
}

TEST_CASE("coalesce sums adjacent dwells and drops interior stores") {
  ContinuousStore ct;
  ct.put("T", {Rat(0), Rat(1)});
  HybridStore s0{Constraint(), ct};

  Trace t;
  t.initial = s0;
  t.steps.push_back({false, Rat(1, 4), project_store(s0, Rat(1, 4)), {}});
  t.steps.push_back({false, Rat(1, 4), project_store(s0, Rat(1, 2)), {}});
  t.steps.push_back({true, Rat(0), project_store(s0, Rat(1, 2)), {}});
  t.terminal = Terminal::Suspended;

  Trace c = coalesce(t);
  CHECK(label_summary(c) == "t=1/2 s");
  CHECK(c.steps[0].store == project_store(s0, Rat(1, 2)));
  CHECK(c.total_time() == t.total_time());
  CHECK(check_trace(t).ok);
  CHECK(check_trace(c).ok);
  CHECK(store_summary(coalesce(c)) == store_summary(c));  // idempotent

  SUBCASE("a pure dwell sequence folds into one projection") {
    Trace d;
    d.initial = s0;
    d.steps.push_back({false, Rat(1), project_store(s0, Rat(1)), {}});
    d.steps.push_back({false, Rat(2), project_store(s0, Rat(3)), {}});
    d.steps.push_back({false, Rat(3), project_store(s0, Rat(6)), {}});
    d.terminal = Terminal::Suspended;
    Trace e = coalesce(d);
    CHECK(e.steps.size() == 1);
    CHECK(e.steps[0].tau == Rat(6));
    CHECK(e.steps[0].store == project_store(s0, Rat(6)));
    CHECK(check_trace(e).ok);
  }

  SUBCASE("no adjacent dwells: unchanged") {
    Trace f = coalesce(c);
    CHECK(label_summary(f) == label_summary(c));
  }
}

TEST_CASE("the checker rejects unlawful traces") {
  ContinuousStore ct;
  ct.put("T", {Rat(0), Rat(1)});
  HybridStore s0{con("a"), ct};

  SUBCASE("a discrete step may not forget information") {
    Trace t;
    t.initial = s0;
    t.steps.push_back({true, Rat(0), HybridStore{Constraint(), ct}, {}});
    t.terminal = Terminal::Suspended;
    CHECK(!check_trace(t).ok);
  }

  SUBCASE("a dwell must project exactly") {
    Trace t;
    t.initial = s0;
    HybridStore wrong = project_store(s0, Rat(2));
    wrong.continuous.set_value("T", Rat(3));
    t.steps.push_back({false, Rat(2), wrong, {}});
    t.terminal = Terminal::Suspended;
    CHECK(!check_trace(t).ok);
  }

  SUBCASE("dwell durations are positive") {
    Trace t;
    t.initial = s0;
    t.steps.push_back({false, Rat(0), s0, {}});
    t.terminal = Terminal::Suspended;
    CHECK(!check_trace(t).ok);
  }

  SUBCASE("the terminal tag must match the final store") {
    Trace t;
    t.initial = s0;
    t.terminal = Terminal::Inconsistent;
    CHECK(!check_trace(t).ok);
  }

  SUBCASE("a recorded guard must hold in its recorded view") {
    Trace t;
    t.initial = s0;
    TraceStep st{true, Rat(0), s0, {}};
    st.fired.push_back(FiredGuard{con("b"), s0});
    t.steps.push_back(st);
    t.terminal = Terminal::Suspended;
    CHECK(!check_trace(t).ok);
  }
}

TEST_CASE("enumerate lists every bounded behavior") {
  SUBCASE("a single tell gives a single one-step trace") {
    Program p = parse_program("init :- tell(X = 1).");
    Enumeration e = enumerate(p, {}, 10);
    REQUIRE(e.traces.size() == 1);
    CHECK(e.traces[0].steps.size() == 1);
    CHECK(e.traces[0].terminal == Terminal::Success);
    CHECK(e.prefix_closed);
    CHECK(check_trace(e.traces[0]).ok);
  }

  SUBCASE("cat and mouse has exactly two outcome classes") {
    Program p = parse_program(kCatMouseSrc);
    Enumeration e = enumerate(p, {}, 40);
    REQUIRE(e.traces.size() == 2);
    CHECK(outcome_classes(e).size() == 2);
    bool saw_m = false, saw_c = false;
    for (auto& t : e.traces) {
      CHECK(t.terminal == Terminal::Success);
      CHECK(t.steps.size() == 14);
      CHECK(t.total_time() == Rat(10));
      CHECK(check_trace(t).ok);
      if (hentails(t.final_store(), con("win_m /\\ prize_m"))) saw_m = true;
      if (hentails(t.final_store(), con("win_c /\\ prize_c"))) saw_c = true;
    }
    CHECK(saw_m);
    CHECK(saw_c);
  }

  SUBCASE("the cooler is deterministic at small depth") {
    Program p = parse_program(kCoolerSrc);
    AgentPtr entry = parse_agent_text("cooler(St, T)", p);
    Enumeration e = enumerate(p, cooler_init(), 12, {}, entry);
    REQUIRE(e.traces.size() == 1);
    CHECK(label_summary(e.traces[0]) == "t=1/2 s s s t=8 s s s t=2 s s s");
    CHECK(e.traces[0].terminal == Terminal::LimitReached);
    CHECK(check_trace(e.traces[0]).ok);
  }

  SUBCASE("a discrete loop is cut at its first revisit") {
    Program p = parse_program("init :- p. p :- ask(true) -> p.");
    Enumeration e = enumerate(p, {}, 10);
    REQUIRE(e.traces.size() == 1);
    CHECK(e.traces[0].terminal == Terminal::LimitReached);
    CHECK(e.traces[0].steps.size() == 2);
  }

  SUBCASE("extra grid durations split dwells without changing reachability") {
    Program p = parse_program("cvar T. init :- change(T, 0, 1) || (ask(T = 4) -> tell(a) + cask(T =< 4)).");
    Enumeration plain = enumerate(p, {}, 8);
    Enumeration split = enumerate(p, {}, 8, {Rat(2)});
    // plain: one dwell straight to the guard; split adds the 2+2 route
    CHECK(plain.traces.size() == 1);
    CHECK(split.traces.size() == 2);
    for (auto& t : split.traces) {
      CHECK(t.terminal == Terminal::Success);
      CHECK(hentails(t.final_store(), con("a")));
      CHECK(t.total_time() == Rat(4));
    }
  }
}
