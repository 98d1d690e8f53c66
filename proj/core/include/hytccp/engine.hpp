#pragma once

#include "hytccp/hstore.hpp"
#include "hytccp/lang.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hytccp {

struct Configuration {
  AgentPtr agent;
  HybridStore store;
};

// Admissible dwell durations, always a prefix interval of (0, inf):
// every tau with 0 < tau < bound is admitted, the bound itself only when
// not strict. `endpoints` keeps the finite per-branch bounds that produced
// the window so enumeration grids can include them.
struct DwellWindow {
  bool unbounded = true;
  Rat bound;
  bool strict = false;
  std::vector<Rat> endpoints;

  bool admits(const Rat& tau) const;
};

// Union within one choice (a dwell is fine if some invariant branch covers
// it) and intersection across parallel components (everyone must cover it).
DwellWindow window_union(const DwellWindow& a, const DwellWindow& b);
DwellWindow window_intersect(const DwellWindow& a, const DwellWindow& b);
std::optional<DwellWindow> window_of(const MaxDuration& d);

// Ask guard that was selected in a discrete step, together with the store
// view it was decided against. The view equals the global store extended
// with the local information of the enclosing exists scopes, so a post-hoc
// checker can re-establish the entailment.
struct FiredGuard {
  Constraint guard;
  HybridStore view;
};

// One discrete successor, described by its effect on the shared input
// store: `told` is the conjunction of constraints published by the firing
// components (local variables already projected out), `delta` the continuous
// entries they wrote. `expansion` marks steps consisting solely of process
// calls being replaced by their bodies; such steps wait until no other
// discrete work is available, which is what interleaves guard evaluation,
// actions and call unfolding as separate steps.
struct DiscreteOption {
  AgentPtr agent;
  Constraint told;
  ContinuousStore delta;
  std::vector<FiredGuard> fired;
  bool expansion = false;
};

struct ContinuousOption {
  DwellWindow window;
};

struct StepOptions {
  std::vector<DiscreteOption> discrete;
  std::optional<ContinuousOption> continuous;

  bool blocked() const { return discrete.empty() && !continuous.has_value(); }
};

struct AppliedStep {
  Configuration config;
  bool inconsistent = false;
  std::vector<FiredGuard> fired;
};

// Small-step transition derivation. Stateless except for the fresh-name
// counter used when process bodies are unfolded, so one Engine instance
// corresponds to one run (or one enumeration).
class Engine {
public:
  explicit Engine(Program program);

  const Program& program() const { return program_; }

  // Starting configuration: binders made globally unique, and while the
  // root is a bare call it is unfolded in place (so an entry of "init :-
  // stop." yields a zero-step trace). Throws InconsistentInitialStoreError.
  Configuration initial(AgentPtr entry, HybridStore store);

  // All successor options of a configuration (one global step).
  StepOptions options(const Configuration& cfg);

  // Build the successor configuration of a discrete option.
  AppliedStep apply(const Configuration& cfg, const DiscreteOption& opt) const;

  // Take a continuous step: global store projects by tau, exists-local
  // continuous stores project along, and every now resolves to the branch
  // its condition selected at the start of the dwell.
  Configuration advance(const Configuration& cfg, const Rat& tau) const;

  // Times in (0, horizon] at which some live guard or now condition flips,
  // collected per scope so guards about local variables are evaluated in
  // the right view. Sorted, duplicates removed.
  std::vector<Rat> events(const Configuration& cfg, std::optional<Rat> horizon);

  // True when every live component is stop (successful termination).
  static bool all_stop(const AgentPtr& agent);

  // Canonical text key for memoization: agent with exists-local stores
  // inlined, plus the global store, fresh-name indices renumbered by first
  // occurrence so alpha-equivalent configurations collide.
  static std::string config_key(const Configuration& cfg);

private:
  Program program_;
  uint64_t fresh_ = 0;

  AgentPtr expand_call(const Agent& call);
  StepOptions derive(const AgentPtr& agent, const HybridStore& view);
  StepOptions compose(const AgentPtr& agent, const HybridStore& view);
};

}  // namespace hytccp
