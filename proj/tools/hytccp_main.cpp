#include "CLI11.hpp"
#include "hytccp/errors.hpp"
#include "hytccp/trace_io.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace hytccp;

namespace {

constexpr int kExitProgramError = 1;
constexpr int kExitRuntimeError = 2;

// Problems with the inputs themselves (files, flag values); distinguished
// from errors raised while evaluating a well-formed program.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProgramArgs {
  std::string path;
  std::string entry_text;
  std::string init_text;
  std::vector<std::string> cont_specs;  // VAR=VALUE or VAR=VALUE@FLOW
};

struct RunArgs {
  std::string policy_name = "urgent";
  uint64_t seed = 0;
  bool seed_given = false;
  std::string step_text = "1";
  size_t max_steps = 10000;
  std::string max_time_text;
  bool raw = false;
  std::string format = "text";
  std::string out_path;
};

void add_program_options(CLI::App* cmd, ProgramArgs& a) {
  cmd->add_option("program", a.path, "path to a .hyt program")->required();
  cmd->add_option("--entry", a.entry_text,
                  "agent run instead of init, e.g. \"cooler(St, T)\"");
  cmd->add_option("--init", a.init_text, "constraint preloaded into the discrete store");
  cmd->add_option("--cont", a.cont_specs,
                  "continuous entry VAR=VALUE or VAR=VALUE@FLOW, repeatable");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string stem_of(const std::string& path) {
  size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

Rat parse_rat_arg(const std::string& text, const std::string& what) {
  auto r = rat_from_string(text);
  if (!r) throw InputError(what + ": not a rational: '" + text + "'");
  return *r;
}

// Loaded program together with the start configuration the flags describe.
struct Loaded {
  Program program;
  AgentPtr entry;  // null: use the program's init
  HybridStore store;
  std::string source;
  std::string name;
};

Loaded load(const ProgramArgs& a) {
  Loaded l;
  l.source = slurp(a.path);
  l.name = stem_of(a.path);
  l.program = parse_program(l.source);

  std::set<std::string> cont_names = l.program.continuous;
  for (auto& spec : a.cont_specs) {
    size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
      throw InputError("--cont expects VAR=VALUE or VAR=VALUE@FLOW, got '" + spec + "'");
    cont_names.insert(spec.substr(0, eq));
  }
  for (auto& spec : a.cont_specs) {
    size_t eq = spec.find('=');
    std::string var = spec.substr(0, eq);
    std::string rest = spec.substr(eq + 1);
    size_t at = rest.find('@');
    Rat value = parse_rat_arg(rest.substr(0, at == std::string::npos ? rest.size() : at), "--cont " + var);
    Rat flow = at == std::string::npos ? Rat(0) : parse_rat_arg(rest.substr(at + 1), "--cont " + var);
    l.store.continuous.put(var, {value, flow});
  }
  if (!a.init_text.empty()) l.store.discrete = parse_constraint_text(a.init_text, cont_names);
  if (!a.entry_text.empty()) l.entry = parse_agent_text(a.entry_text, l.program);
  return l;
}

Policy make_policy(const RunArgs& r) {
  uint64_t seed = r.seed;
  if (!r.seed_given) {
    if (const char* env = std::getenv("HYTCCP_SEED")) seed = std::strtoull(env, nullptr, 10);
  }
  if (r.policy_name == "urgent") return Policy::urgent(seed);
  if (r.policy_name == "lazy") return Policy::lazy(seed);
  if (r.policy_name == "random")
    return Policy::random(seed, parse_rat_arg(r.step_text, "--step"));
  throw InputError("unknown policy '" + r.policy_name + "' (urgent, lazy or random)");
}

Limits make_limits(const RunArgs& r) {
  Limits lim;
  lim.max_steps = r.max_steps;
  if (!r.max_time_text.empty()) {
    Rat t = parse_rat_arg(r.max_time_text, "--max-time");
    if (!(t > 0)) throw InputError("--max-time must be positive");
    lim.max_time = t;
  }
  return lim;
}

std::string limits_text(const Limits& lim) {
  std::string s = "steps=" + std::to_string(lim.max_steps);
  if (lim.max_time) s += ", time=" + rat_to_string(*lim.max_time);
  return s;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << content;
}

int cmd_parse(const ProgramArgs& pa) {
  Loaded l = load(pa);
  std::string listing;
  for (auto& [name, decl] : l.program.declarations) {
    if (!listing.empty()) listing += ", ";
    listing += name + "/" + std::to_string(decl.params.size());
  }
  std::cout << "declarations: " << listing << "\n";
  if (!l.program.continuous.empty()) {
    std::string cv;
    for (auto& v : l.program.continuous) {
      if (!cv.empty()) cv += ", ";
      cv += v;
    }
    std::cout << "continuous:   " << cv << "\n";
  }
  std::cout << "\n" << pretty(l.program);
  return 0;
}

int cmd_run(const ProgramArgs& pa, const RunArgs& ra) {
  Loaded l = load(pa);
  Policy policy = make_policy(ra);
  Limits lim = make_limits(ra);
  Trace t = run(l.program, l.store, policy, lim, l.entry);
  if (!ra.raw) t = coalesce(t);

  DocumentMeta meta{l.name, l.source, policy.describe(), limits_text(lim)};
  TraceDocument doc = to_structured(t, meta);
  emit(ra.out_path, ra.format == "jsonl" ? render_jsonl(doc) : render_text(doc));
  return 0;
}

int cmd_explore(const ProgramArgs& pa, size_t max_depth, const std::string& grid_text) {
  Loaded l = load(pa);
  std::vector<Rat> grid;
  if (!grid_text.empty()) {
    std::stringstream ss(grid_text);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(parse_rat_arg(item, "--grid"));
  }
  Enumeration e = enumerate(l.program, l.store, max_depth, grid, l.entry);

  std::map<std::string, size_t> terminals;
  for (auto& t : e.traces) ++terminals[terminal_name(t.terminal)];
  std::cout << "traces: " << e.traces.size() << (e.prefix_closed ? " (prefix-closed)" : "")
            << "\n";
  std::cout << "terminals:";
  for (auto& [name, n] : terminals) std::cout << " " << name << "=" << n;
  std::cout << "\n";
  auto classes = outcome_classes(e);
  std::cout << "outcome classes: " << classes.size() << "\n";
  for (auto& [store, n] : classes) std::cout << "  x" << n << "  " << store << "\n";
  return 0;
}

int cmd_sample(const ProgramArgs& pa, const RunArgs& ra, const std::string& sample_step) {
  Loaded l = load(pa);
  Policy policy = make_policy(ra);
  Limits lim = make_limits(ra);
  Trace t = coalesce(run(l.program, l.store, policy, lim, l.entry));
  Rat step = parse_rat_arg(sample_step, "--step");
  emit(ra.out_path, render_csv(to_samples(t, step)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hy-tccp interpreter and simulator"};
  app.require_subcommand(1);

  ProgramArgs pa;
  RunArgs ra;
  std::vector<CLI::Option*> seed_opts;
  size_t max_depth = 32;
  std::string grid_text;
  std::string sample_step = "1";

  CLI::App* parse_cmd = app.add_subcommand("parse", "check a program and print its listing");
  add_program_options(parse_cmd, pa);

  auto add_run_options = [&](CLI::App* cmd) {
    add_program_options(cmd, pa);
    cmd->add_option("--policy", ra.policy_name, "urgent, lazy or random")
        ->check(CLI::IsMember({"urgent", "lazy", "random"}));
    seed_opts.push_back(
        cmd->add_option("--seed", ra.seed, "policy seed (default: $HYTCCP_SEED or 0)"));
    cmd->add_option("--max-steps", ra.max_steps, "stop after this many steps");
    cmd->add_option("--max-time", ra.max_time_text, "simulation horizon (rational)");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "simulate one trace under a policy");
  add_run_options(run_cmd);
  run_cmd->add_option("--step", ra.step_text, "dwell grid step for the random policy");
  run_cmd->add_flag("--raw", ra.raw, "do not coalesce adjacent dwells");
  run_cmd->add_option("--format", ra.format, "text or jsonl")
      ->check(CLI::IsMember({"text", "jsonl"}));
  run_cmd->add_option("--out", ra.out_path, "write the document here instead of stdout");

  CLI::App* explore_cmd = app.add_subcommand("explore", "enumerate bounded behaviors");
  add_program_options(explore_cmd, pa);
  explore_cmd->add_option("--max-depth", max_depth, "bound on steps per trace");
  explore_cmd->add_option("--grid", grid_text, "extra dwell durations, comma-separated");

  CLI::App* sample_cmd = app.add_subcommand("sample", "run, then sample continuous variables as CSV");
  add_run_options(sample_cmd);
  sample_cmd->add_option("--step", sample_step, "sampling interval (rational)");
  sample_cmd->add_option("--out", ra.out_path, "write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitProgramError;
  }
  for (auto* o : seed_opts)
    if (o->count() > 0) ra.seed_given = true;

  try {
    if (parse_cmd->parsed()) return cmd_parse(pa);
    if (run_cmd->parsed()) return cmd_run(pa, ra);
    if (explore_cmd->parsed()) return cmd_explore(pa, max_depth, grid_text);
    if (sample_cmd->parsed()) return cmd_sample(pa, ra, sample_step);
  } catch (const ParseError& e) {
    std::cerr << "error: " << pa.path << ": " << e.what() << "\n";
    return kExitProgramError;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitProgramError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return 0;
}
