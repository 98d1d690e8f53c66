#include "hytccp/engine.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "hytccp/errors.hpp"

namespace hytccp {

namespace {

// Sort, dedup and keep only admitted grid candidates.
void tidy_endpoints(DwellWindow& w) {
  std::sort(w.endpoints.begin(), w.endpoints.end());
  w.endpoints.erase(std::unique(w.endpoints.begin(), w.endpoints.end()), w.endpoints.end());
  w.endpoints.erase(std::remove_if(w.endpoints.begin(), w.endpoints.end(),
                                   [&](const Rat& t) { return !w.admits(t); }),
                    w.endpoints.end());
}

}  // namespace

bool DwellWindow::admits(const Rat& tau) const {
  if (tau <= 0) return false;
  if (unbounded) return true;
  if (tau < bound) return true;
  return tau == bound && !strict;
}

std::optional<DwellWindow> window_of(const MaxDuration& d) {
  switch (d.kind) {
    case MaxDuration::Kind::None:
      return std::nullopt;
    case MaxDuration::Kind::Unbounded:
      return DwellWindow{};
    case MaxDuration::Kind::Positive: {
      DwellWindow w;
      w.unbounded = false;
      w.bound = d.bound;
      w.strict = d.strict;
      w.endpoints = {d.bound};
      tidy_endpoints(w);
      return w;
    }
  }
  return std::nullopt;
}

DwellWindow window_union(const DwellWindow& a, const DwellWindow& b) {
  DwellWindow w;
  if (a.unbounded || b.unbounded) {
    w.unbounded = true;
  } else {
    w.unbounded = false;
    if (a.bound != b.bound) {
      const DwellWindow& wide = a.bound > b.bound ? a : b;
      w.bound = wide.bound;
      w.strict = wide.strict;
    } else {
      w.bound = a.bound;
      w.strict = a.strict && b.strict;
    }
  }
  w.endpoints = a.endpoints;
  w.endpoints.insert(w.endpoints.end(), b.endpoints.begin(), b.endpoints.end());
  tidy_endpoints(w);
  return w;
}

DwellWindow window_intersect(const DwellWindow& a, const DwellWindow& b) {
  DwellWindow w;
  if (a.unbounded && b.unbounded) {
    w.unbounded = true;
  } else if (a.unbounded || b.unbounded) {
    const DwellWindow& fin = a.unbounded ? b : a;
    w.unbounded = false;
    w.bound = fin.bound;
    w.strict = fin.strict;
  } else {
    w.unbounded = false;
    if (a.bound != b.bound) {
      const DwellWindow& tight = a.bound < b.bound ? a : b;
      w.bound = tight.bound;
      w.strict = tight.strict;
    } else {
      w.bound = a.bound;
      w.strict = a.strict || b.strict;
    }
  }
  w.endpoints = a.endpoints;
  w.endpoints.insert(w.endpoints.end(), b.endpoints.begin(), b.endpoints.end());
  tidy_endpoints(w);
  return w;
}

namespace {

std::string strip_fresh_suffix(const std::string& name) {
  auto pos = name.find('#');
  return pos == std::string::npos ? name : name.substr(0, pos);
}

// Apply a simultaneous variable renaming to an agent tree and give every
// exists binder on the way a globally fresh name. Binders shadow: the
// renamed binder replaces any outer mapping of the same source name.
AgentPtr rewrite_agent(const AgentPtr& a, const std::map<std::string, std::string>& ren,
                       uint64_t& fresh) {
  auto renamed = [&](const std::string& n) {
    auto it = ren.find(n);
    return it == ren.end() ? n : it->second;
  };
  switch (a->kind) {
    case Agent::Kind::Stop:
      return a;
    case Agent::Kind::Tell:
      return Agent::tell(rename_constraint_vars(a->constraint, ren));
    case Agent::Kind::Change:
      return Agent::change(renamed(a->name), a->value, a->flow);
    case Agent::Kind::Call: {
      std::vector<std::string> args;
      args.reserve(a->args.size());
      for (auto& x : a->args) args.push_back(renamed(x));
      return Agent::call(a->name, std::move(args));
    }
    case Agent::Kind::Parallel:
      return Agent::parallel(rewrite_agent(a->left, ren, fresh),
                             rewrite_agent(a->right, ren, fresh));
    case Agent::Kind::Now:
      return Agent::now(rename_constraint_vars(a->constraint, ren),
                        rewrite_agent(a->left, ren, fresh),
                        rewrite_agent(a->right, ren, fresh));
    case Agent::Kind::Choice: {
      std::vector<AskBranch> asks;
      asks.reserve(a->asks.size());
      for (auto& br : a->asks)
        asks.push_back({rename_constraint_vars(br.guard, ren), rewrite_agent(br.body, ren, fresh)});
      std::vector<Constraint> invs;
      invs.reserve(a->invariants.size());
      for (auto& inv : a->invariants) invs.push_back(rename_constraint_vars(inv, ren));
      return Agent::choice(std::move(asks), std::move(invs));
    }
    case Agent::Kind::Hide: {
      std::string unique = strip_fresh_suffix(a->name) + "#" + std::to_string(++fresh);
      std::map<std::string, std::string> inner = ren;
      inner[a->name] = unique;
      return Agent::hide_with(unique, rewrite_agent(a->body, inner, fresh), a->local);
    }
  }
  return a;
}

void flatten_parallel(const AgentPtr& a, std::vector<AgentPtr>& out) {
  if (a->kind == Agent::Kind::Parallel) {
    flatten_parallel(a->left, out);
    flatten_parallel(a->right, out);
  } else {
    out.push_back(a);
  }
}

// Rebuild the original parallel tree shape with the leaves replaced
// left-to-right.
AgentPtr rebuild_parallel(const AgentPtr& shape, const std::vector<AgentPtr>& leaves,
                          size_t& idx) {
  if (shape->kind == Agent::Kind::Parallel) {
    AgentPtr l = rebuild_parallel(shape->left, leaves, idx);
    AgentPtr r = rebuild_parallel(shape->right, leaves, idx);
    return Agent::parallel(std::move(l), std::move(r));
  }
  return leaves[idx++];
}

// Store view inside an exists scope: local information joined onto the
// global store with the hidden variable's global occurrences projected out.
HybridStore inner_view(const Agent& hide_node, const HybridStore& outer) {
  HybridStore v;
  v.discrete = conjoin(hide_node.local.discrete, hide(hide_node.name, outer.discrete));
  v.continuous = merge(hide_node.local.continuous, hide_cont(hide_node.name, outer.continuous));
  return v;
}

std::string render_rat_opt(const std::optional<Rat>& r) {
  return r ? rat_to_string(*r) : "_";
}

// Text form of an agent for memo keys. Unlike the pretty-printer this
// includes exists-local stores, which are part of the configuration state.
void render_agent(const AgentPtr& a, std::string& out) {
  switch (a->kind) {
    case Agent::Kind::Stop:
      out += "stop";
      return;
    case Agent::Kind::Tell:
      out += "tell(";
      out += display_constraint(a->constraint);
      out += ")";
      return;
    case Agent::Kind::Change:
      out += "change(";
      out += a->name;
      out += ",";
      out += render_rat_opt(a->value);
      out += ",";
      out += render_rat_opt(a->flow);
      out += ")";
      return;
    case Agent::Kind::Call: {
      out += a->name;
      out += "(";
      for (size_t i = 0; i < a->args.size(); ++i) {
        if (i) out += ",";
        out += a->args[i];
      }
      out += ")";
      return;
    }
    case Agent::Kind::Parallel:
      out += "(";
      render_agent(a->left, out);
      out += " || ";
      render_agent(a->right, out);
      out += ")";
      return;
    case Agent::Kind::Now:
      out += "now(";
      out += display_constraint(a->constraint);
      out += "){";
      render_agent(a->left, out);
      out += "}{";
      render_agent(a->right, out);
      out += "}";
      return;
    case Agent::Kind::Choice: {
      out += "[";
      for (size_t i = 0; i < a->asks.size(); ++i) {
        if (i) out += " + ";
        out += "ask(";
        out += display_constraint(a->asks[i].guard);
        out += ")->";
        render_agent(a->asks[i].body, out);
      }
      for (size_t i = 0; i < a->invariants.size(); ++i) {
        if (i || !a->asks.empty()) out += " + ";
        out += "cask(";
        out += display_constraint(a->invariants[i]);
        out += ")";
      }
      out += "]";
      return;
    }
    case Agent::Kind::Hide:
      out += "ex ";
      out += a->name;
      out += "[";
      out += display_store(a->local);
      out += "](";
      render_agent(a->body, out);
      out += ")";
      return;
  }
}

// Identity of a successor option, for removing duplicates produced by
// choices with coinciding branches.
std::string option_key(const DiscreteOption& o) {
  std::string k;
  render_agent(o.agent, k);
  k += "|";
  k += display_constraint(o.told);
  k += "|";
  k += display_cstore(o.delta);
  return k;
}

AgentPtr advance_agent(const AgentPtr& a, const HybridStore& view, const Rat& tau) {
  switch (a->kind) {
    case Agent::Kind::Parallel:
      return Agent::parallel(advance_agent(a->left, view, tau),
                             advance_agent(a->right, view, tau));
    case Agent::Kind::Hide: {
      HybridStore v = inner_view(*a, view);
      AgentPtr body = advance_agent(a->body, v, tau);
      HybridStore local{a->local.discrete, project(a->local.continuous, tau)};
      return Agent::hide_with(a->name, std::move(body), std::move(local));
    }
    case Agent::Kind::Now: {
      // The branch was selected when the dwell started; the wrapper does
      // not survive the step.
      const AgentPtr& side = hentails(view, a->constraint) ? a->left : a->right;
      return advance_agent(side, view, tau);
    }
    default:
      return a;
  }
}

// Guards whose entailment flips mark event times. Collected together with
// the store view they are judged in, because guards under an exists scope
// mention local variables.
void collect_guard_scopes(const AgentPtr& a, const HybridStore& view,
                          std::vector<std::pair<HybridStore, std::vector<Constraint>>>& out) {
  switch (a->kind) {
    case Agent::Kind::Parallel:
      collect_guard_scopes(a->left, view, out);
      collect_guard_scopes(a->right, view, out);
      return;
    case Agent::Kind::Hide: {
      HybridStore v = inner_view(*a, view);
      collect_guard_scopes(a->body, v, out);
      return;
    }
    case Agent::Kind::Now: {
      out.push_back({view, {a->constraint}});
      const AgentPtr& side = hentails(view, a->constraint) ? a->left : a->right;
      collect_guard_scopes(side, view, out);
      return;
    }
    case Agent::Kind::Choice: {
      std::vector<Constraint> guards;
      guards.reserve(a->asks.size() + a->invariants.size());
      for (auto& br : a->asks) guards.push_back(br.guard);
      for (auto& inv : a->invariants) guards.push_back(inv);
      out.push_back({view, std::move(guards)});
      return;
    }
    default:
      return;
  }
}

}  // namespace

Engine::Engine(Program program) : program_(std::move(program)) {}

AgentPtr Engine::expand_call(const Agent& call) {
  auto it = program_.declarations.find(call.name);
  if (it == program_.declarations.end())
    throw EngineError("call to undeclared process " + call.name);
  const Declaration& d = it->second;
  if (d.params.size() != call.args.size())
    throw EngineError("arity mismatch in call to " + call.name);
  std::map<std::string, std::string> ren;
  for (size_t i = 0; i < d.params.size(); ++i) ren[d.params[i]] = call.args[i];
  return rewrite_agent(d.body, ren, fresh_);
}

Configuration Engine::initial(AgentPtr entry, HybridStore store) {
  if (!hconsistent(store)) throw InconsistentInitialStoreError();
  AgentPtr agent = rewrite_agent(entry, {}, fresh_);
  int unrolled = 0;
  while (agent->kind == Agent::Kind::Call) {
    if (++unrolled > 100)
      throw EngineError("entry expands through calls without reaching a body");
    agent = expand_call(*agent);
  }
  return Configuration{std::move(agent), std::move(store)};
}

StepOptions Engine::options(const Configuration& cfg) {
  StepOptions out = derive(cfg.agent, cfg.store);

  // A dwell must keep the global store consistent for its whole duration.
  if (out.continuous) {
    auto cap = window_of(max_duration(cfg.store, Constraint()));
    if (!cap)
      out.continuous.reset();
    else
      out.continuous->window = window_intersect(out.continuous->window, *cap);
  }

  // Choices with coinciding branches can produce the same successor twice.
  std::set<std::string> seen;
  std::vector<DiscreteOption> unique;
  unique.reserve(out.discrete.size());
  for (auto& o : out.discrete)
    if (seen.insert(option_key(o)).second) unique.push_back(std::move(o));
  out.discrete = std::move(unique);
  return out;
}

StepOptions Engine::derive(const AgentPtr& agent, const HybridStore& view) {
  StepOptions out;
  switch (agent->kind) {
    case Agent::Kind::Stop:
      return out;

    case Agent::Kind::Tell: {
      DiscreteOption o;
      o.agent = Agent::stop();
      o.told = agent->constraint;
      out.discrete.push_back(std::move(o));
      return out;
    }

    case Agent::Kind::Change: {
      bool have = !view.continuous.is_false() && view.continuous.has(agent->name);
      if ((!agent->value || !agent->flow) && !have) throw NoCurrentValueError(agent->name);
      ContEntry cur = have ? view.continuous.get(agent->name) : ContEntry{};
      DiscreteOption o;
      o.agent = Agent::stop();
      o.delta.put(agent->name, ContEntry{agent->value ? *agent->value : cur.value,
                                         agent->flow ? *agent->flow : cur.flow});
      out.discrete.push_back(std::move(o));
      return out;
    }

    case Agent::Kind::Call: {
      DiscreteOption o;
      o.agent = expand_call(*agent);
      o.expansion = true;
      out.discrete.push_back(std::move(o));
      return out;
    }

    case Agent::Kind::Choice: {
      for (auto& br : agent->asks) {
        if (hentails(view, br.guard)) {
          DiscreteOption o;
          o.agent = br.body;
          o.fired.push_back(FiredGuard{br.guard, view});
          out.discrete.push_back(std::move(o));
        }
      }
      std::optional<DwellWindow> w;
      for (auto& inv : agent->invariants) {
        auto bw = window_of(max_duration(view, inv));
        if (bw) w = w ? window_union(*w, *bw) : *bw;
      }
      if (w) out.continuous = ContinuousOption{std::move(*w)};
      return out;
    }

    case Agent::Kind::Now: {
      const AgentPtr& side = hentails(view, agent->constraint) ? agent->left : agent->right;
      StepOptions sub = derive(side, view);
      if (sub.blocked()) {
        // The selected branch cannot move: a stutter step that sheds the
        // wrapper and leaves the store untouched.
        DiscreteOption o;
        o.agent = side;
        out.discrete.push_back(std::move(o));
        return out;
      }
      out.discrete = std::move(sub.discrete);
      if (sub.continuous) {
        // The condition's truth was fixed when the step began; a dwell may
        // not outlive the first instant at which it would flip.
        DwellWindow w = std::move(sub.continuous->window);
        std::optional<Rat> horizon;
        if (!w.unbounded) horizon = w.bound;
        auto flips = event_times(view, {agent->constraint}, horizon);
        if (!flips.empty()) {
          DwellWindow cap;
          cap.unbounded = false;
          cap.bound = flips.front();
          cap.strict = false;
          cap.endpoints = {flips.front()};
          w = window_intersect(w, cap);
        }
        out.continuous = ContinuousOption{std::move(w)};
      }
      return out;
    }

    case Agent::Kind::Hide: {
      HybridStore v = inner_view(*agent, view);
      StepOptions sub = derive(agent->body, v);
      for (auto& o : sub.discrete) {
        // The local store absorbs everything the body said; only its
        // projection (and the writes to non-local variables) leave scope.
        Constraint l2 = conjoin(agent->local.discrete, o.told);
        ContinuousStore local_delta, outer_delta;
        if (o.delta.is_false()) {
          outer_delta = ContinuousStore::falsity();
        } else {
          for (auto& [var, e] : o.delta.entries())
            (var == agent->name ? local_delta : outer_delta).put(var, e);
        }
        DiscreteOption lifted;
        lifted.told = hide(agent->name, l2);
        lifted.delta = std::move(outer_delta);
        lifted.fired = std::move(o.fired);
        lifted.expansion = o.expansion;
        HybridStore local2{std::move(l2), update(agent->local.continuous, local_delta)};
        lifted.agent = Agent::hide_with(agent->name, std::move(o.agent), std::move(local2));
        out.discrete.push_back(std::move(lifted));
      }
      out.continuous = std::move(sub.continuous);
      // A dwell must keep the local view consistent too; the global
      // consistency cap cannot see hidden entries.
      if (out.continuous && !agent->local.continuous.empty()) {
        if (auto cap = window_of(max_duration(v, Constraint())))
          out.continuous->window = window_intersect(out.continuous->window, *cap);
        else
          out.continuous.reset();
      }
      return out;
    }

    case Agent::Kind::Parallel:
      return compose(agent, view);
  }
  return out;
}

StepOptions Engine::compose(const AgentPtr& agent, const HybridStore& view) {
  std::vector<AgentPtr> comps;
  flatten_parallel(agent, comps);

  std::vector<StepOptions> opts;
  opts.reserve(comps.size());
  for (auto& c : comps) opts.push_back(derive(c, view));

  StepOptions out;

  // Discrete: everyone who can act acts in the same step, each reading the
  // shared input store. Steps that merely replace a call by its body wait
  // until no other discrete work is on offer; that is what makes guard
  // evaluation, actions and unfolding show up as separate steps of a run.
  bool any_action = false;
  for (auto& so : opts)
    for (auto& o : so.discrete)
      if (!o.expansion) any_action = true;

  std::vector<size_t> active;
  std::vector<std::vector<const DiscreteOption*>> firing(comps.size());
  for (size_t i = 0; i < comps.size(); ++i) {
    for (auto& o : opts[i].discrete)
      if (!any_action || !o.expansion) firing[i].push_back(&o);
    if (!firing[i].empty()) active.push_back(i);
  }

  if (!active.empty()) {
    std::vector<size_t> pick(active.size(), 0);
    while (true) {
      std::vector<AgentPtr> leaves = comps;
      Constraint told;
      ContinuousStore delta;
      std::vector<FiredGuard> fired;
      bool expansion = true;
      for (size_t k = 0; k < active.size(); ++k) {
        const DiscreteOption& o = *firing[active[k]][pick[k]];
        leaves[active[k]] = o.agent;
        told = conjoin(told, o.told);
        delta = merge(delta, o.delta);
        fired.insert(fired.end(), o.fired.begin(), o.fired.end());
        expansion = expansion && o.expansion;
      }
      DiscreteOption g;
      size_t idx = 0;
      g.agent = rebuild_parallel(agent, leaves, idx);
      g.told = std::move(told);
      g.delta = std::move(delta);
      g.fired = std::move(fired);
      g.expansion = expansion;
      out.discrete.push_back(std::move(g));

      size_t k = 0;
      for (; k < active.size(); ++k) {
        if (++pick[k] < firing[active[k]].size()) break;
        pick[k] = 0;
      }
      if (k == active.size()) break;
    }
  }

  // Continuous: time passes only if every component either admits it or is
  // blocked, and someone actually admits it. Components holding a pending
  // discrete action (and nothing continuous) pin the clock.
  bool possible = true;
  std::optional<DwellWindow> w;
  for (auto& so : opts) {
    if (so.continuous)
      w = w ? window_intersect(*w, so.continuous->window) : so.continuous->window;
    else if (!so.blocked())
      possible = false;
  }
  if (possible && w) out.continuous = ContinuousOption{std::move(*w)};
  return out;
}

AppliedStep Engine::apply(const Configuration& cfg, const DiscreteOption& opt) const {
  AppliedStep r;
  r.fired = opt.fired;
  HybridStore next{conjoin(cfg.store.discrete, opt.told),
                   update(cfg.store.continuous, opt.delta)};
  r.config = Configuration{opt.agent, std::move(next)};
  r.inconsistent = !hconsistent(r.config.store);
  return r;
}

Configuration Engine::advance(const Configuration& cfg, const Rat& tau) const {
  return Configuration{advance_agent(cfg.agent, cfg.store, tau), project_store(cfg.store, tau)};
}

std::vector<Rat> Engine::events(const Configuration& cfg, std::optional<Rat> horizon) {
  std::vector<std::pair<HybridStore, std::vector<Constraint>>> scopes;
  collect_guard_scopes(cfg.agent, cfg.store, scopes);
  std::set<Rat> times;
  for (auto& [view, guards] : scopes)
    for (auto& t : event_times(view, guards, horizon)) times.insert(t);
  return std::vector<Rat>(times.begin(), times.end());
}

bool Engine::all_stop(const AgentPtr& agent) {
  switch (agent->kind) {
    case Agent::Kind::Stop:
      return true;
    case Agent::Kind::Parallel:
      return all_stop(agent->left) && all_stop(agent->right);
    case Agent::Kind::Hide:
      return all_stop(agent->body);
    default:
      return false;
  }
}

std::string Engine::config_key(const Configuration& cfg) {
  std::string raw;
  render_agent(cfg.agent, raw);
  raw += " @ ";
  raw += display_store(cfg.store);

  // Renumber fresh-name indices by first occurrence so runs that unfolded
  // in a different order still produce colliding keys for alpha-equivalent
  // configurations.
  std::string out;
  out.reserve(raw.size());
  std::map<std::string, std::string> order;
  size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] == '#' && i + 1 < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i + 1]))) {
      size_t j = i + 1;
      while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
      auto [it, added] = order.emplace(raw.substr(i + 1, j - i - 1),
                                       std::to_string(order.size() + 1));
      (void)added;
      out += '#';
      out += it->second;
      i = j;
    } else {
      out += raw[i++];
    }
  }
  return out;
}

}  // namespace hytccp
