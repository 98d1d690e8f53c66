#pragma once

#include "hytccp/fm.hpp"
#include "hytccp/term.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hytccp {

// Equation kept in binding form: lhs is always a named variable, rhs is
// either another named variable (an alias to its class representative) or a
// non-variable term one constructor deep.
struct TermEq {
  TermPtr lhs, rhs;
};

// Disequation l != r. `pattern_vars` are the atom-local placeholders that
// came from `_` in source: the atom states that l and r fail to match for
// every instantiation of those placeholders. Anonymous variables NOT listed
// there are ordinary existential variables shared with the rest of the
// constraint.
struct TermNeq {
  TermPtr lhs, rhs;
  std::set<std::string> pattern_vars;
};

// A conjunction of linear-rational atoms, stream equations/disequations and
// 0-ary signals, kept in a canonical normal form, plus a distinguished
// bottom element FALSE. Construction normalizes eagerly: unification closes
// the equation part, numeric bindings become linear rows, and exact
// Fourier-Motzkin decides satisfiability of the linear part, so an
// inconsistent conjunction is always represented as FALSE.
class Constraint {
public:
  Constraint() = default;  // true

  static Constraint falsity();
  static Constraint lin(LinRow row);
  static Constraint eq(TermPtr l, TermPtr r);
  static Constraint neq(TermPtr l, TermPtr r, std::set<std::string> pattern_vars = {});
  static Constraint signal(std::string name);

  bool is_false() const { return false_; }
  bool is_true() const;

  const std::vector<LinRow>& linear() const { return linear_; }
  const std::vector<TermEq>& equations() const { return eqs_; }
  const std::vector<TermNeq>& disequations() const { return neqs_; }
  const std::set<std::string>& signals() const { return signals_; }

  std::set<std::string> named_vars() const;
  std::set<std::string> all_vars() const;

  // Deep resolution of t through the stored bindings.
  TermPtr resolve(const TermPtr& t) const;
  TermPtr resolve_name(const std::string& name) const;

  // Exact value of a numeric variable when the linear part pins it to a
  // point, nullopt otherwise.
  std::optional<Rat> pinned_value(const std::string& name) const;

  bool operator==(const Constraint& o) const;

private:
  bool false_ = false;
  std::vector<LinRow> linear_;
  std::vector<TermEq> eqs_;
  std::vector<TermNeq> neqs_;
  std::set<std::string> signals_;

  friend class Normalizer;
  friend Constraint conjoin(const Constraint&, const Constraint&);
  friend bool entails(const Constraint&, const Constraint&);
  friend Constraint hide(const std::string&, const Constraint&);
};

Constraint conjoin(const Constraint& a, const Constraint& b);
bool entails(const Constraint& c, const Constraint& d);

// Existential quantification of one variable, computed by renaming it to a
// fresh anonymous variable and simplifying: numeric anons are eliminated
// exactly, resolvable ones are substituted away, and residual anons survive
// only where they carry stream-shape information.
Constraint hide(const std::string& var, const Constraint& c);

inline bool is_false(const Constraint& c) { return c.is_false(); }
inline bool equivalent(const Constraint& a, const Constraint& b) {
  return entails(a, b) && entails(b, a);
}

Constraint rename_constraint_var(const Constraint& c, const std::string& from,
                                 const std::string& to);

// Simultaneous renaming, so swaps like {X->Y, Y->X} land correctly.
Constraint rename_constraint_vars(const Constraint& c,
                                  const std::map<std::string, std::string>& ren);

// Rewrites a row through c's term bindings: aliased variables become their
// class representative, numerically bound ones their value. Lets the linear
// machinery see equalities that live in the term part.
LinRow resolve_row(const Constraint& c, const LinRow& row);

// Fresh existential variable name; '~' keeps it outside the surface syntax.
std::string fresh_anon_name();
bool is_anon_name(const std::string& name);

// Display form: one string per atom, deep-resolved per named variable,
// anonymous variables renumbered _1, _2 (single occurrences as plain _),
// atoms sorted. Equal renderings of normalized constraints imply mutual
// entailment.
std::vector<std::string> display_atoms(const Constraint& c);
std::string display_constraint(const Constraint& c);

}  // namespace hytccp
