#include "hytccp/hstore.hpp"

#include <algorithm>

namespace hytccp {

namespace {
// Reserved elimination variable for the parametric time analysis. The '~'
// prefix keeps it disjoint from every surface-syntax name.
const std::string kTimeVar = "~t";
}  // namespace

Constraint with_pins(const HybridStore& h) {
  if (h.continuous.is_false()) return Constraint::falsity();
  Constraint c = h.discrete;
  for (auto& [var, e] : h.continuous.entries())
    c = conjoin(c, Constraint::lin(make_row({{var, Rat(1)}}, e.value, Rel::Eq)));
  return c;
}

bool hconsistent(const HybridStore& h) {
  if (h.discrete.is_false() || h.continuous.is_false()) return false;
  return !with_pins(h).is_false();
}

bool hentails(const HybridStore& h, const Constraint& d) {
  return entails(with_pins(h), d);
}

HybridStore project_store(const HybridStore& h, const Rat& tau) {
  return HybridStore{h.discrete, project(h.continuous, tau)};
}

MaxDuration MaxDuration::none() {
  MaxDuration d;
  d.kind = Kind::None;
  return d;
}

MaxDuration MaxDuration::positive(Rat bound, bool strict) {
  MaxDuration d;
  d.kind = Kind::Positive;
  d.bound = std::move(bound);
  d.strict = strict;
  return d;
}

MaxDuration MaxDuration::unbounded() { return MaxDuration{}; }

bool MaxDuration::operator==(const MaxDuration& o) const {
  if (kind != o.kind) return false;
  if (kind != Kind::Positive) return true;
  return bound == o.bound && strict == o.strict;
}

MaxDuration min_duration(const MaxDuration& a, const MaxDuration& b) {
  if (a.kind == MaxDuration::Kind::None || b.kind == MaxDuration::Kind::None)
    return MaxDuration::none();
  if (a.kind == MaxDuration::Kind::Unbounded) return b;
  if (b.kind == MaxDuration::Kind::Unbounded) return a;
  if (a.bound != b.bound) return a.bound < b.bound ? a : b;
  return a.strict ? a : b;  // equal bounds: the strict one admits less
}

namespace {

// Base system in the reserved time variable: the discrete linear part plus
// one equation x - flow*t = value per continuous entry.
std::vector<LinRow> time_rows(const HybridStore& h) {
  std::vector<LinRow> rows;
  for (auto& row : h.discrete.linear()) rows.push_back(row);
  for (auto& [var, e] : h.continuous.entries())
    rows.push_back(make_row({{var, Rat(1)}, {kTimeVar, -e.flow}}, e.value, Rel::Eq));
  rows.push_back(make_row({{kTimeVar, Rat(-1)}}, Rat(0), Rel::Le));  // t >= 0
  return rows;
}

// Longest prefix of (0, inf) avoiding the "bad" time set, given as the
// projection interval of the failing system onto t (already cut to t >= 0).
MaxDuration prefix_avoiding(const RatInterval& bad) {
  if (bad.empty) return MaxDuration::unbounded();
  Rat lo = bad.lo ? *bad.lo : Rat(0);
  bool lo_strict = bad.lo ? bad.lo_strict : false;
  if (lo < 0) {
    lo = 0;
    lo_strict = false;
  }
  // the dwell window is closed at 0: failure at the start instant, or at
  // arbitrarily small positive times, rules every positive dwell out
  if (lo == 0) return MaxDuration::none();
  // good prefix ends where bad begins: a closed start of bad forces a
  // strict cap, an open start admits the endpoint
  return MaxDuration::positive(lo, /*strict=*/!lo_strict);
}

MaxDuration linear_atom_duration(const std::vector<LinRow>& base, const LinRow& atom) {
  auto branch = [&](LinRow neg) {
    std::vector<LinRow> rows = base;
    rows.push_back(std::move(neg));
    return prefix_avoiding(fm_interval(std::move(rows), kTimeVar));
  };
  auto negated_terms = [&]() {
    std::vector<std::pair<std::string, Rat>> t;
    for (auto& [v, c] : atom.terms) t.emplace_back(v, -c);
    return t;
  };
  switch (atom.rel) {
    case Rel::Le:  // negation: terms > rhs
      return branch(make_row(negated_terms(), -atom.rhs, Rel::Lt));
    case Rel::Lt:  // negation: terms >= rhs
      return branch(make_row(negated_terms(), -atom.rhs, Rel::Le));
    case Rel::Eq: {
      MaxDuration below = branch(make_row(atom.terms, atom.rhs, Rel::Lt));
      MaxDuration above = branch(make_row(negated_terms(), -atom.rhs, Rel::Lt));
      return min_duration(below, above);
    }
  }
  return MaxDuration::none();
}

}  // namespace

MaxDuration max_duration(const HybridStore& h, const Constraint& inv) {
  if (!hconsistent(h)) return MaxDuration::none();
  if (inv.is_false()) return MaxDuration::none();

  std::vector<LinRow> base = time_rows(h);

  // store consistency itself caps the dwell: find where the base system
  // stops being satisfiable
  MaxDuration result;
  {
    RatInterval live = fm_interval(base, kTimeVar);
    // live contains 0 (the store is consistent now); it ends where
    // consistency is lost
    if (live.empty) return MaxDuration::none();
    if (live.hi) {
      if (*live.hi == 0) return MaxDuration::none();  // consistent only at 0
      result = MaxDuration::positive(*live.hi, live.hi_strict);
    }
  }

  // time-independent part: stream equations, disequations, signals
  if (!inv.equations().empty() || !inv.disequations().empty() || !inv.signals().empty()) {
    Constraint residue;
    for (auto& e : inv.equations()) residue = conjoin(residue, Constraint::eq(e.lhs, e.rhs));
    for (auto& n : inv.disequations())
      residue = conjoin(residue, Constraint::neq(n.lhs, n.rhs, n.pattern_vars));
    for (auto& s : inv.signals()) residue = conjoin(residue, Constraint::signal(s));
    if (!hentails(h, residue)) return MaxDuration::none();
  }

  for (auto& atom : inv.linear())
    result = min_duration(result, linear_atom_duration(base, resolve_row(h.discrete, atom)));

  return result;
}

std::vector<Rat> event_times(const HybridStore& h, const std::vector<Constraint>& guards,
                             std::optional<Rat> horizon) {
  // candidate roots from each linear guard atom along the flow
  std::vector<Rat> candidates;
  for (auto& g : guards) {
    if (g.is_false()) continue;
    for (auto& atom : g.linear()) {
      Rat constant = atom.rhs;
      Rat slope = 0;
      bool solvable = true;
      for (auto& [v, k] : atom.terms) {
        if (h.continuous.has(v)) {
          const ContEntry& e = h.continuous.get(v);
          constant -= k * e.value;
          slope += k * e.flow;
        } else if (auto p = h.discrete.pinned_value(v)) {
          constant -= k * *p;
        } else {
          solvable = false;
          break;
        }
      }
      if (!solvable || slope == 0) continue;
      Rat root = constant / slope;
      if (root <= 0) continue;
      if (horizon && root > *horizon) continue;
      candidates.push_back(std::move(root));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty()) return candidates;

  // epsilon: half the smallest gap between neighbouring candidates and 0
  Rat min_gap = candidates.front();
  for (size_t i = 1; i < candidates.size(); ++i)
    min_gap = std::min(min_gap, Rat(candidates[i] - candidates[i - 1]));
  Rat eps = min_gap / 2;

  auto statuses = [&](const Rat& t) {
    std::vector<bool> out;
    HybridStore at = project_store(h, t);
    for (auto& g : guards) out.push_back(hentails(at, g));
    return out;
  };

  std::vector<Rat> events;
  for (auto& t : candidates) {
    auto before = statuses(t - eps);
    auto at = statuses(t);
    auto after = statuses(t + eps);
    if (before != at || at != after) events.push_back(t);
  }
  return events;
}

std::string display_store(const HybridStore& h) {
  return "⟨" + display_constraint(h.discrete) + " ‖ " +
         display_cstore(h.continuous) + "⟩";
}

}  // namespace hytccp
