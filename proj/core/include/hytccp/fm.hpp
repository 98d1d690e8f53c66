#pragma once

#include "hytccp/rational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hytccp {

enum class Rel { Eq, Le, Lt };

// One row of a linear system: sum(coeff * var) REL rhs. Terms are kept
// sorted by variable name with no zero coefficients.
struct LinRow {
  std::vector<std::pair<std::string, Rat>> terms;
  Rat rhs;
  Rel rel = Rel::Le;
};

LinRow make_row(std::vector<std::pair<std::string, Rat>> terms, Rat rhs, Rel rel);

// Exact existential elimination of `var` over the rationals: Gauss on an
// equality row when one mentions the variable, Fourier-Motzkin otherwise.
// The result has the same solutions in the remaining variables.
std::vector<LinRow> fm_eliminate(std::vector<LinRow> rows, const std::string& var);

bool fm_satisfiable(std::vector<LinRow> rows);

struct RatInterval {
  bool empty = false;
  std::optional<Rat> lo;  // nullopt = unbounded below
  bool lo_strict = false;
  std::optional<Rat> hi;  // nullopt = unbounded above
  bool hi_strict = false;

  bool contains(const Rat& v) const;
};

// Projection of the solution set onto `var` (eliminates every other
// variable first). The projection of a polyhedron onto one axis is an
// interval, possibly empty or unbounded.
RatInterval fm_interval(std::vector<LinRow> rows, const std::string& var);

// Substitutes exact values for a row's variables; true if the row holds.
bool row_satisfied(const LinRow& row,
                   const std::vector<std::pair<std::string, Rat>>& values);

// Canonicalizes every row, drops tautologies and duplicates, and keeps only
// the tightest of same-profile inequalities. Solution set is unchanged.
std::vector<LinRow> fm_simplify(std::vector<LinRow> rows);

}  // namespace hytccp
