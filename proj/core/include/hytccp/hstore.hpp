#pragma once

#include "hytccp/constraint.hpp"
#include "hytccp/cstore.hpp"

#include <optional>
#include <vector>

namespace hytccp {

// Paired discrete + continuous store. The discrete part only ever grows;
// the continuous part is replaced on updates and evolves under time.
struct HybridStore {
  Constraint discrete;
  ContinuousStore continuous;

  bool operator==(const HybridStore& o) const {
    return discrete == o.discrete && continuous == o.continuous;
  }
};

// Discrete constraint together with one equation per continuous variable
// pinning it to its current value; the view entailment works against.
Constraint with_pins(const HybridStore& h);

// Consistent iff neither part is bottom and the pinned view is satisfiable.
bool hconsistent(const HybridStore& h);

bool hentails(const HybridStore& h, const Constraint& d);

// Time passage for the whole store: continuous values advance, the
// discrete part is untouched.
HybridStore project_store(const HybridStore& h, const Rat& tau);

// How long an invariant stays entailed (and the store consistent) from now.
// Entailment is required along (0, d]: the left endpoint itself is excluded,
// so an invariant that only fails at the start does not force None.
struct MaxDuration {
  enum class Kind { None, Positive, Unbounded };
  Kind kind = Kind::Unbounded;
  Rat bound;          // Positive only
  bool strict = false;  // true: any dwell must stay strictly below bound

  static MaxDuration none();
  static MaxDuration positive(Rat bound, bool strict);
  static MaxDuration unbounded();

  bool operator==(const MaxDuration& o) const;
};

MaxDuration min_duration(const MaxDuration& a, const MaxDuration& b);

MaxDuration max_duration(const HybridStore& h, const Constraint& inv);

// Positive times at which some guard's entailment status flips, found by
// solving each linear guard atom along the flow and re-checking entailment
// just before, at, and just after each root. Sorted ascending.
std::vector<Rat> event_times(const HybridStore& h, const std::vector<Constraint>& guards,
                             std::optional<Rat> horizon = std::nullopt);

std::string display_store(const HybridStore& h);

}  // namespace hytccp
