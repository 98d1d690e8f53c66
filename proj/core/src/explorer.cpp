#include "hytccp/explorer.hpp"

#include <algorithm>
#include <mutex>
#include <random>
#include <set>
#include <stdexcept>

#include "hytccp/errors.hpp"

namespace hytccp {

Policy Policy::urgent(uint64_t seed) {
  Policy p;
  p.kind = Kind::Urgent;
  p.seed = seed;
  return p;
}

Policy Policy::lazy(uint64_t seed) {
  Policy p;
  p.kind = Kind::Lazy;
  p.seed = seed;
  return p;
}

Policy Policy::random(uint64_t seed, Rat horizon_step) {
  Policy p;
  p.kind = Kind::Random;
  p.seed = seed;
  p.horizon_step = std::move(horizon_step);
  return p;
}

Policy Policy::exhaustive(size_t max_depth, std::vector<Rat> duration_grid) {
  Policy p;
  p.kind = Kind::Exhaustive;
  p.max_depth = max_depth;
  p.duration_grid = std::move(duration_grid);
  return p;
}

std::string Policy::describe() const {
  switch (kind) {
    case Kind::Urgent:
      return "urgent(seed=" + std::to_string(seed) + ")";
    case Kind::Lazy:
      return "lazy(seed=" + std::to_string(seed) + ")";
    case Kind::Random:
      return "random(seed=" + std::to_string(seed) + ",step=" + rat_to_string(horizon_step) + ")";
    case Kind::Exhaustive: {
      std::string out = "exhaustive(depth=" + std::to_string(max_depth);
      if (!duration_grid.empty()) {
        out += ",grid=[";
        for (size_t i = 0; i < duration_grid.size(); ++i) {
          if (i) out += ",";
          out += rat_to_string(duration_grid[i]);
        }
        out += "]";
      }
      return out + ")";
    }
  }
  return "?";
}

const char* terminal_name(Terminal t) {
  switch (t) {
    case Terminal::Success:
      return "success";
    case Terminal::Suspended:
      return "suspended";
    case Terminal::Inconsistent:
      return "inconsistent";
    case Terminal::LimitReached:
      return "limit-reached";
  }
  return "?";
}

Rat Trace::total_time() const {
  Rat t(0);
  for (auto& s : steps)
    if (!s.discrete) t += s.tau;
  return t;
}

const HybridStore& Trace::final_store() const {
  return steps.empty() ? initial : steps.back().store;
}

namespace {

AgentPtr entry_or_default(const Program& p, AgentPtr entry) {
  if (entry) return entry;
  if (p.entry) return p.entry;
  throw std::invalid_argument("program declares no init/0 process and no entry was given");
}

// Dwell candidates inside a window: guard flips, the window's own finite
// endpoints, and any extra values the caller supplied. Sorted, admitted.
std::vector<Rat> dwell_grid(Engine& eng, const Configuration& cfg, const DwellWindow& w,
                            const std::vector<Rat>& extra) {
  std::set<Rat> grid;
  std::optional<Rat> horizon;
  if (!w.unbounded) horizon = w.bound;
  for (auto& t : eng.events(cfg, horizon))
    if (w.admits(t)) grid.insert(t);
  for (auto& t : w.endpoints)
    if (w.admits(t)) grid.insert(t);
  for (auto& t : extra)
    if (w.admits(t)) grid.insert(t);
  return std::vector<Rat>(grid.begin(), grid.end());
}

}  // namespace

Trace run(const Program& p, const HybridStore& init, const Policy& policy,
          const Limits& limits, AgentPtr entry) {
  if (policy.kind == Policy::Kind::Exhaustive)
    throw std::invalid_argument("the exhaustive policy drives enumerate, not run");
  if (policy.kind == Policy::Kind::Random && !(policy.horizon_step > 0))
    throw std::invalid_argument("horizon_step must be positive");

  Engine eng(p);
  Configuration cfg = eng.initial(entry_or_default(p, entry), init);

  Trace trace;
  trace.initial = cfg.store;
  std::mt19937_64 rng(policy.seed);
  uint64_t sigma_streak = 0;
  Rat elapsed(0);

  while (true) {
    if (trace.steps.size() >= limits.max_steps) {
      trace.terminal = Terminal::LimitReached;
      break;
    }
    StepOptions so = eng.options(cfg);
    if (so.blocked()) {
      trace.terminal = Engine::all_stop(cfg.agent) ? Terminal::Success : Terminal::Suspended;
      break;
    }
    // The budget is a hard simulation horizon: once it is spent the run
    // ends, even for pending instantaneous actions. Programs with a free-
    // running process would otherwise chatter at the horizon instant until
    // the step cap.
    if (limits.max_time && elapsed >= *limits.max_time) {
      trace.terminal = Terminal::LimitReached;
      break;
    }

    // The remaining time budget narrows the window; its bound doubles as a
    // grid point so a run can dwell exactly up to the budget.
    std::optional<DwellWindow> window;
    if (so.continuous) {
      window = so.continuous->window;
      if (limits.max_time) {
        Rat remaining = *limits.max_time - elapsed;
        window = window_intersect(*window, DwellWindow{false, remaining, false, {remaining}});
      }
    }

    std::optional<Rat> tau;
    size_t sigma_pick = 0;
    bool take_sigma = false;

    switch (policy.kind) {
      case Policy::Kind::Urgent: {
        if (window) {
          std::optional<Rat> horizon;
          if (!window->unbounded) horizon = window->bound;
          for (auto& t : eng.events(cfg, horizon)) {
            if (window->admits(t)) {
              tau = t;
              break;
            }
          }
          if (!tau && !window->unbounded)
            tau = window->strict ? Rat(window->bound / 2) : window->bound;
        }
        bool can_sigma = !so.discrete.empty();
        if (can_sigma && tau)
          take_sigma = rng() % 2 == 0;
        else
          take_sigma = can_sigma;
        if (take_sigma && so.discrete.size() > 1) sigma_pick = rng() % so.discrete.size();
        break;
      }
      case Policy::Kind::Lazy: {
        if (window && !window->unbounded)
          tau = window->strict ? Rat(window->bound / 2) : window->bound;
        take_sigma = !tau && !so.discrete.empty();
        if (take_sigma && so.discrete.size() > 1) sigma_pick = rng() % so.discrete.size();
        break;
      }
      case Policy::Kind::Random: {
        std::vector<Rat> grid;
        if (window) {
          grid = dwell_grid(eng, cfg, *window, {});
          if (window->admits(policy.horizon_step)) grid.push_back(policy.horizon_step);
          std::sort(grid.begin(), grid.end());
          grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        }
        size_t total = so.discrete.size() + grid.size();
        if (total > 0) {
          size_t k = total > 1 ? static_cast<size_t>(rng() % total) : 0;
          if (k < so.discrete.size()) {
            take_sigma = true;
            sigma_pick = k;
          } else {
            tau = grid[k - so.discrete.size()];
          }
        }
        break;
      }
      case Policy::Kind::Exhaustive:
        break;  // rejected above
    }

    if (!take_sigma && !tau) {
      // Successors exist in principle but none is realizable: the only
      // option is an endless dwell during which nothing will ever change.
      trace.terminal = Terminal::Suspended;
      break;
    }

    if (take_sigma) {
      AppliedStep ap = eng.apply(cfg, so.discrete[sigma_pick]);
      trace.steps.push_back({true, Rat(0), ap.config.store, ap.fired});
      if (ap.inconsistent) {
        trace.terminal = Terminal::Inconsistent;
        break;
      }
      cfg = std::move(ap.config);
      if (++sigma_streak >= limits.max_steps) {
        trace.terminal = Terminal::LimitReached;
        break;
      }
    } else {
      cfg = eng.advance(cfg, *tau);
      trace.steps.push_back({false, *tau, cfg.store, {}});
      if (!hconsistent(cfg.store)) {
        trace.terminal = Terminal::Inconsistent;
        break;
      }
      elapsed += *tau;
      sigma_streak = 0;
    }
  }
  return trace;
}

namespace {

// Options keyed by canonical configuration rendering, shared across the
// whole enumeration so revisited states are derived once.
class OptionMemo {
public:
  StepOptions get(Engine& eng, const Configuration& cfg, const std::string& key) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it == memo_.end()) it = memo_.emplace(key, eng.options(cfg)).first;
    return it->second;
  }

private:
  std::mutex mu_;
  std::map<std::string, StepOptions> memo_;
};

class Enumerator {
public:
  Enumerator(const Program& p, size_t max_depth, std::vector<Rat> grid)
      : eng_(p), max_depth_(max_depth), grid_(std::move(grid)) {}

  Engine& engine() { return eng_; }

  std::vector<Trace> explore(const Configuration& start) {
    init_ = start.store;
    dfs(start);
    return std::move(out_);
  }

private:
  Engine eng_;
  size_t max_depth_;
  std::vector<Rat> grid_;
  OptionMemo memo_;
  HybridStore init_;
  std::vector<TraceStep> path_;
  std::set<std::string> on_path_;
  std::vector<Trace> out_;

  void emit(Terminal t) {
    Trace tr;
    tr.initial = init_;
    tr.steps = path_;
    tr.terminal = t;
    out_.push_back(std::move(tr));
  }

  void dfs(const Configuration& cfg) {
    std::string key = Engine::config_key(cfg);
    StepOptions so = memo_.get(eng_, cfg, key);
    if (so.blocked()) {
      emit(Engine::all_stop(cfg.agent) ? Terminal::Success : Terminal::Suspended);
      return;
    }
    if (path_.size() >= max_depth_) {
      emit(Terminal::LimitReached);
      return;
    }

    bool branched = false;
    on_path_.insert(key);
    for (auto& o : so.discrete) {
      AppliedStep ap = eng_.apply(cfg, o);
      path_.push_back({true, Rat(0), ap.config.store, ap.fired});
      if (ap.inconsistent)
        emit(Terminal::Inconsistent);
      else if (on_path_.count(Engine::config_key(ap.config)))
        emit(Terminal::LimitReached);  // looping without progress
      else
        dfs(ap.config);
      path_.pop_back();
      branched = true;
    }
    if (so.continuous) {
      for (auto& tau : dwell_grid(eng_, cfg, so.continuous->window, grid_)) {
        Configuration nxt = eng_.advance(cfg, tau);
        path_.push_back({false, tau, nxt.store, {}});
        if (!hconsistent(nxt.store))
          emit(Terminal::Inconsistent);
        else if (on_path_.count(Engine::config_key(nxt)))
          emit(Terminal::LimitReached);
        else
          dfs(nxt);
        path_.pop_back();
        branched = true;
      }
    }
    on_path_.erase(key);

    // Options existed but no dwell duration could be instantiated (an
    // endless window with no event to aim for).
    if (!branched) emit(Terminal::LimitReached);
  }
};

}  // namespace

Enumeration enumerate(const Program& p, const HybridStore& init, size_t max_depth,
                      const std::vector<Rat>& duration_grid, AgentPtr entry) {
  Enumerator en(p, max_depth, duration_grid);
  Configuration start = en.engine().initial(entry_or_default(p, entry), init);
  Enumeration result;
  result.traces = en.explore(start);
  return result;
}

std::map<std::string, size_t> outcome_classes(const Enumeration& e) {
  std::map<std::string, size_t> classes;
  for (auto& t : e.traces) ++classes[display_store(t.final_store())];
  return classes;
}

Trace coalesce(const Trace& t) {
  Trace out;
  out.initial = t.initial;
  out.terminal = t.terminal;
  for (auto& s : t.steps) {
    if (!s.discrete && !out.steps.empty() && !out.steps.back().discrete) {
      out.steps.back().tau += s.tau;
      out.steps.back().store = s.store;
    } else {
      out.steps.push_back(s);
    }
  }
  return out;
}

CheckReport check_trace(const Trace& t) {
  CheckReport r;
  auto fail = [&](size_t i, const std::string& what) {
    r.ok = false;
    r.problems.push_back("step " + std::to_string(i + 1) + ": " + what);
  };

  const HybridStore* prev = &t.initial;
  for (size_t i = 0; i < t.steps.size(); ++i) {
    const TraceStep& s = t.steps[i];
    if (s.discrete) {
      if (!entails(s.store.discrete, prev->discrete))
        fail(i, "discrete step weakened the store");
      for (auto& fg : s.fired) {
        if (!hentails(fg.view, fg.guard))
          fail(i, "recorded guard is not entailed by its recorded view");
        if (!entails(fg.view.discrete, prev->discrete))
          fail(i, "guard view does not extend the preceding store");
        if (!fg.view.continuous.is_false() && !prev->continuous.is_false()) {
          for (auto& [var, e] : fg.view.continuous.entries())
            if (prev->continuous.has(var) && !(prev->continuous.get(var) == e))
              fail(i, "guard view disagrees with the preceding continuous store on " + var);
        }
      }
    } else {
      if (!(s.tau > 0))
        fail(i, "dwell duration is not positive");
      else if (!(s.store == project_store(*prev, s.tau)))
        fail(i, "dwell store is not the linear projection of its predecessor");
    }
    if (i + 1 < t.steps.size() && !hconsistent(s.store))
      fail(i, "inconsistent store in the middle of the trace");
    prev = &s.store;
  }

  bool final_consistent = hconsistent(t.final_store());
  if (t.terminal == Terminal::Inconsistent && final_consistent) {
    r.ok = false;
    r.problems.push_back("terminal says inconsistent but the final store is consistent");
  }
  if (t.terminal != Terminal::Inconsistent && !final_consistent) {
    r.ok = false;
    r.problems.push_back(std::string("final store is inconsistent but terminal says ") +
                         terminal_name(t.terminal));
  }
  return r;
}

}  // namespace hytccp
