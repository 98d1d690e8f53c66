#include "doctest.h"
#include "hytccp/trace_io.hpp"

using namespace hytccp;

namespace {

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

Trace cooler_trace(const Rat& budget) {
  Program p = parse_program(kCoolerSrc);
  AgentPtr entry = parse_agent_text("cooler(St, T)", p);
  HybridStore s{parse_constraint_text("St = [off|_] /\\ T >= 26 /\\ T =< 30", {"T"}), {}};
  s.continuous.put("T", {Rat(29), Rat(2)});
  Limits lim;
  lim.max_time = budget;
  return run(p, s, Policy::urgent(0), lim, entry);
}

bool has_row(const std::vector<SampleRow>& rows, const Rat& t, const std::string& v,
             const Rat& val) {
  for (auto& r : rows)
    if (r.time == t && r.variable == v && r.value == val) return true;
  return false;
}

}  // namespace

TEST_CASE("hashing is stable and input-sensitive") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("cooler") != fnv1a_hex("cooler "));
}

TEST_CASE("structured documents are byte-stable and round-trip") {
  Trace t = coalesce(cooler_trace(Rat(20)));
  DocumentMeta meta{"cooler", kCoolerSrc, "urgent(seed=0)", "steps=10000, time=20"};

  TraceDocument doc = to_structured(t, meta);
  CHECK(doc.steps.size() == t.steps.size());
  CHECK(doc.terminal == "limit-reached");
  CHECK(doc.total_time == Rat(20));

  std::string lines = render_jsonl(doc);
  CHECK(lines == render_jsonl(to_structured(coalesce(cooler_trace(Rat(20))), meta)));
  // 17 steps plus header and end lines
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 19);

  TraceDocument back = parse_document(lines);
  CHECK(back == doc);
  CHECK(render_jsonl(back) == lines);

  SUBCASE("different stores never render equal") {
    TraceDocument other = to_structured(coalesce(cooler_trace(Rat(21))), meta);
    CHECK(render_jsonl(other) != lines);
  }

  SUBCASE("the human rendering mentions every label") {
    std::string text = render_text(doc);
    CHECK(text.find("tau 1/2 (0.5)") != std::string::npos);
    CHECK(text.find("sigma") != std::string::npos);
    CHECK(text.find("limit-reached at time 20") != std::string::npos);
  }
}

TEST_CASE("an empty trace serializes with zero steps") {
  Program p = parse_program("init :- stop.");
  Trace t = run(p, {}, Policy::urgent(0));
  TraceDocument doc = to_structured(t);
  CHECK(doc.steps.empty());
  CHECK(doc.terminal == "success");
  TraceDocument back = parse_document(render_jsonl(doc));
  CHECK(back == doc);
}

TEST_CASE("recorded guards survive the round trip") {
  Program p = parse_program("init :- ask(true) -> tell(a).");
  Trace t = run(p, {}, Policy::urgent(0));
  TraceDocument doc = to_structured(t);
  REQUIRE(doc.steps.size() == 2);
  REQUIRE(doc.steps[0].fired.size() == 1);
  CHECK(doc.steps[0].fired[0] == "true");
  CHECK(parse_document(render_jsonl(doc)) == doc);
}

TEST_CASE("malformed documents are rejected") {
  CHECK_THROWS_AS(parse_document(""), std::runtime_error);
  CHECK_THROWS_AS(parse_document("{\"record\":\"trace\"}\n"), std::runtime_error);
  Program p = parse_program("init :- stop.");
  std::string good = render_jsonl(to_structured(run(p, {}, Policy::urgent(0))));
  std::string headless = good.substr(good.find('\n') + 1);
  CHECK_THROWS_AS(parse_document(headless), std::runtime_error);
}

TEST_CASE("sampling walks the published temperature curve") {
  Trace t = coalesce(cooler_trace(Rat(20)));
  auto rows = to_samples(t, Rat(1, 2));

  CHECK(has_row(rows, Rat(0), "T", Rat(29)));
  CHECK(has_row(rows, Rat(1, 2), "T", Rat(30)));
  CHECK(has_row(rows, Rat(9, 2), "T", Rat(28)));   // four units into the cooldown
  CHECK(has_row(rows, Rat(17, 2), "T", Rat(26)));  // cooldown ends
  CHECK(has_row(rows, Rat(19, 2), "T", Rat(28)));  // heating again at +2
  CHECK(has_row(rows, Rat(20), "T", Rat(29)));

  // boundary values match the stored ones exactly
  Rat elapsed(0);
  for (auto& s : t.steps) {
    if (s.discrete) continue;
    elapsed += s.tau;
    CHECK(has_row(rows, elapsed, "T", s.store.continuous.get("T").value));
  }

  // rows are sorted and free of duplicates
  for (size_t i = 1; i < rows.size(); ++i) {
    bool ordered = rows[i - 1].time < rows[i].time ||
                   (rows[i - 1].time == rows[i].time && rows[i - 1].variable < rows[i].variable);
    CHECK(ordered);
  }

  SUBCASE("a step beyond the duration leaves endpoint rows only") {
    auto ends = to_samples(t, Rat(100));
    for (auto& r : ends) {
      bool boundary = r.time == Rat(0) || r.time == Rat(1, 2) || r.time == Rat(17, 2) ||
                      r.time == Rat(21, 2) || r.time == Rat(37, 2) || r.time == Rat(20);
      CHECK(boundary);
    }
  }

  SUBCASE("csv rendering is exact") {
    std::string csv = render_csv(rows);
    CHECK(csv.rfind("time,variable,value\n", 0) == 0);
    CHECK(csv.find("9/2,T,28\n") != std::string::npos);
    CHECK(csv.find("20,T,29\n") != std::string::npos);
  }
}

TEST_CASE("sampling a trace without continuous state is empty") {
  Program p = parse_program("init :- tell(a).");
  Trace t = run(p, {}, Policy::urgent(0));
  CHECK(to_samples(t, Rat(1)).empty());
  CHECK(render_csv(to_samples(t, Rat(1))) == "time,variable,value\n");
  CHECK_THROWS_AS(to_samples(t, Rat(0)), std::invalid_argument);
}

TEST_CASE("variables introduced mid-run are sampled from their birth") {
  Program p = parse_program(
      "cvar X. cvar Y. "
      "init :- change(X, 0, 1) || (ask(X = 2) -> (change(Y, 10, -1) || cask(true)) + cask(X =< 2)).");
  Trace t = coalesce(run(p, {}, Policy::urgent(0), Limits{10000, Rat(3)}));
  auto rows = to_samples(t, Rat(1));
  CHECK(has_row(rows, Rat(1), "X", Rat(1)));
  CHECK(!has_row(rows, Rat(1), "Y", Rat(10)));
  CHECK(has_row(rows, Rat(2), "Y", Rat(10)));
  CHECK(has_row(rows, Rat(3), "Y", Rat(9)));
  CHECK(has_row(rows, Rat(3), "X", Rat(3)));
}
