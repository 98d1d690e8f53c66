// Microbenchmarks for the hot paths: constraint algebra, entailment, dwell
// computation, parsing, and whole runs. Inputs come from the corpus
// directory baked in at configure time, so run these from a working tree.

#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hytccp/explorer.hpp"
#include "hytccp/lang.hpp"

using namespace hytccp;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(BENCH_CORPUS_DIR) + "/" + name, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file " + name);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TermPtr V(const std::string& n) { return Term::var(VarRef{n, VarKind::Discrete, false}); }
TermPtr S(const std::string& n) { return Term::sym(n); }
TermPtr anon() { return Term::var(VarRef{fresh_anon_name(), VarKind::Discrete, true}); }

// The thermostat's off-mode store: state stream known one cell deep, the
// temperature banded and currently rising.
HybridStore cooler_store() {
  Constraint c = conjoin(
      Constraint::eq(V("St"), Term::cell(S("off"), anon())),
      conjoin(Constraint::lin(make_row({{"T", Rat(-1)}}, Rat(-26), Rel::Le)),
              Constraint::lin(make_row({{"T", Rat(1)}}, Rat(30), Rel::Le))));
  ContinuousStore ct;
  ct.put("T", {Rat(29), Rat(2)});
  return {c, ct};
}

void BM_conjoin(benchmark::State& state) {
  Constraint a = cooler_store().discrete;
  TermPtr p = anon();
  Constraint b = conjoin(
      Constraint::neq(V("WG"), Term::cell(S("dng"), p), {p->var_ref().name}),
      conjoin(Constraint::lin(make_row({{"V", Rat(1)}, {"T", Rat(-2)}}, Rat(12), Rel::Lt)),
              Constraint::signal("go")));
  for (auto _ : state) {
    Constraint c = conjoin(a, b);
    benchmark::DoNotOptimize(c.is_false());
  }
}
BENCHMARK(BM_conjoin);

void BM_entails(benchmark::State& state) {
  Constraint store = cooler_store().discrete;
  Constraint guard = conjoin(Constraint::eq(V("St"), Term::cell(S("off"), anon())),
                             Constraint::lin(make_row({{"T", Rat(1)}}, Rat(30), Rel::Le)));
  for (auto _ : state) {
    bool e = entails(store, guard);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_entails);

void BM_hentails(benchmark::State& state) {
  HybridStore store = project_store(cooler_store(), Rat(1, 2));  // T now exactly 30
  Constraint guard = conjoin(Constraint::eq(V("St"), Term::cell(S("off"), anon())),
                             Constraint::lin(make_row({{"T", Rat(1)}}, Rat(30), Rel::Eq)));
  for (auto _ : state) {
    bool e = hentails(store, guard);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_hentails);

void BM_max_duration_cooler(benchmark::State& state) {
  HybridStore store = cooler_store();
  Constraint inv = conjoin(Constraint::eq(V("St"), Term::cell(S("off"), anon())),
                           Constraint::lin(make_row({{"T", Rat(1)}}, Rat(30), Rel::Le)));
  for (auto _ : state) {
    MaxDuration d = max_duration(store, inv);
    benchmark::DoNotOptimize(d.bound);
  }
}
BENCHMARK(BM_max_duration_cooler);

void BM_run_cooler(benchmark::State& state) {
  Program p = parse_program(slurp("cooler.hyt"));
  HybridStore init;
  init.discrete = parse_constraint_text("St = [off|_] /\\ T >= 26 /\\ T =< 30", {"T"});
  init.continuous.put("T", {Rat(29), Rat(2)});
  AgentPtr entry = parse_agent_text("cooler(St, T)", p);
  for (auto _ : state) {
    Trace t = run(p, init, Policy::urgent(0), Limits{10000, Rat(20)}, entry);
    benchmark::DoNotOptimize(t.steps.size());
  }
}
BENCHMARK(BM_run_cooler);

void BM_enumerate_catmouse(benchmark::State& state) {
  Program p = parse_program(slurp("catmouse.hyt"));
  for (auto _ : state) {
    Enumeration e = enumerate(p, HybridStore{}, 40);
    benchmark::DoNotOptimize(e.traces.size());
  }
}
BENCHMARK(BM_enumerate_catmouse);

void BM_parse_gear(benchmark::State& state) {
  std::string source = slurp("gear.hyt");
  for (auto _ : state) {
    Program p = parse_program(source);
    benchmark::DoNotOptimize(p.declarations.size());
  }
}
BENCHMARK(BM_parse_gear);

}  // namespace

BENCHMARK_MAIN();
