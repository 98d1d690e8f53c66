#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hytccp/engine.hpp"

namespace hytccp {

// How a single run resolves the transition system's non-determinism.
//   urgent: dwell to the earliest guard flip (or the window bound when no
//           flip is ahead); seeded draws break branch ties and decide when
//           both a discrete and a continuous step are on offer.
//   lazy:   dwell the maximal admissible duration, preferring time over
//           action when both are possible.
//   random: a flat seeded pick across discrete successors and the event
//           grid of dwell durations; horizon_step supplies a dwell for
//           windows with no finite bound or event.
//   exhaustive: not a run policy — carries the bounds used by enumerate.
struct Policy {
  enum class Kind { Urgent, Lazy, Random, Exhaustive };

  Kind kind = Kind::Urgent;
  uint64_t seed = 0;
  Rat horizon_step = Rat(1);       // random only
  size_t max_depth = 32;           // exhaustive only
  std::vector<Rat> duration_grid;  // exhaustive only: extra dwell candidates

  static Policy urgent(uint64_t seed);
  static Policy lazy(uint64_t seed);
  static Policy random(uint64_t seed, Rat horizon_step);
  static Policy exhaustive(size_t max_depth, std::vector<Rat> duration_grid = {});

  // One-line descriptor, stable across runs, e.g. "urgent(seed=7)".
  std::string describe() const;
};

struct Limits {
  // Caps the number of steps; doubling as the guard against Zeno behavior,
  // since this many discrete steps without time progress trips it too.
  uint64_t max_steps = 10000;
  std::optional<Rat> max_time;
};

enum class Terminal { Success, Suspended, Inconsistent, LimitReached };

const char* terminal_name(Terminal t);

struct TraceStep {
  bool discrete = true;  // discrete step, else a dwell of length tau
  Rat tau;
  HybridStore store;  // store after the step
  std::vector<FiredGuard> fired;
};

// One observable behavior: the labeled store sequence of a run.
struct Trace {
  HybridStore initial;
  std::vector<TraceStep> steps;
  Terminal terminal = Terminal::Success;

  Rat total_time() const;
  const HybridStore& final_store() const;
};

// Single run under a policy. `entry` overrides the program's init process
// (pass null to use it). Throws InconsistentInitialStoreError, and
// std::invalid_argument for an exhaustive policy or a missing entry.
Trace run(const Program& p, const HybridStore& init, const Policy& policy,
          const Limits& limits = {}, AgentPtr entry = nullptr);

// Every behavior reachable within max_depth steps, with dwell durations
// drawn from event times, admissible-window endpoints and duration_grid.
// Traces are the maximal explored paths; prefix_closed records that each
// of their prefixes is a derivable behavior as well (they are not listed).
// Revisiting a configuration already on the current path ends the trace
// with limit-reached rather than looping.
struct Enumeration {
  std::vector<Trace> traces;
  bool prefix_closed = true;
};

Enumeration enumerate(const Program& p, const HybridStore& init, size_t max_depth,
                      const std::vector<Rat>& duration_grid = {}, AgentPtr entry = nullptr);

// Group an enumeration's traces by the display form of their final store.
std::map<std::string, size_t> outcome_classes(const Enumeration& e);

// Merge adjacent dwells into one of summed length, dropping the stores
// strictly inside. Idempotent; discrete steps pass through.
Trace coalesce(const Trace& t);

// Re-validates a finished trace against the transition laws: discrete
// steps only ever strengthen the discrete store, dwells are exact linear
// projections, every recorded guard was entailed by its recorded view and
// that view extends the predecessor store, and the terminal tag matches
// the final store's consistency.
struct CheckReport {
  bool ok = true;
  std::vector<std::string> problems;
};

CheckReport check_trace(const Trace& t);

}  // namespace hytccp
