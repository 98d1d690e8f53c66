#include "hytccp/fm.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace hytccp {

namespace {

// Sorted terms, zero coeffs dropped; scaled so coefficients are coprime
// integers. Inequalities may only be scaled by positive factors; equalities
// are additionally sign-fixed so the first coefficient is positive.
LinRow canonical(LinRow row) {
  std::map<std::string, Rat> acc;
  for (auto& [v, c] : row.terms) acc[v] += c;
  row.terms.clear();
  for (auto& [v, c] : acc)
    if (c != 0) row.terms.emplace_back(v, c);
  if (row.terms.empty()) return row;

  BigInt den_lcm = 1;
  for (auto& [v, c] : row.terms)
    den_lcm = boost::multiprecision::lcm(den_lcm, rat_den(c));
  den_lcm = boost::multiprecision::lcm(den_lcm, rat_den(row.rhs));
  BigInt num_gcd = 0;
  auto scaled_num = [&](const Rat& c) { return rat_num(c) * (den_lcm / rat_den(c)); };
  for (auto& [v, c] : row.terms)
    num_gcd = boost::multiprecision::gcd(num_gcd, boost::multiprecision::abs(scaled_num(c)));
  if (row.rhs != 0)
    num_gcd = boost::multiprecision::gcd(num_gcd, boost::multiprecision::abs(scaled_num(row.rhs)));
  if (num_gcd == 0) num_gcd = 1;
  Rat factor = Rat(den_lcm, num_gcd);
  for (auto& [v, c] : row.terms) c *= factor;
  row.rhs *= factor;
  if (row.rel == Rel::Eq && row.terms.front().second < 0) {
    for (auto& [v, c] : row.terms) c = -c;
    row.rhs = -row.rhs;
  }
  return row;
}

bool ground_holds(const LinRow& row) {
  switch (row.rel) {
    case Rel::Eq:
      return row.rhs == 0;
    case Rel::Le:
      return row.rhs >= 0;
    case Rel::Lt:
      return row.rhs > 0;
  }
  return false;
}

std::optional<Rat> coeff_of(const LinRow& row, const std::string& var) {
  for (auto& [v, c] : row.terms)
    if (v == var) return c;
  return std::nullopt;
}

// row with `var` removed and the rest divided by |coeff|; returns the pair
// (bound expression as a row fragment) used by the FM combination step.
LinRow drop_var(const LinRow& row, const std::string& var) {
  LinRow out;
  out.rhs = row.rhs;
  out.rel = row.rel;
  for (auto& [v, c] : row.terms)
    if (v != var) out.terms.emplace_back(v, c);
  return out;
}

struct RowKey {
  std::vector<std::pair<std::string, std::string>> terms;
  std::string rhs;
  Rel rel;
  bool operator<(const RowKey& o) const {
    if (terms != o.terms) return terms < o.terms;
    if (rhs != o.rhs) return rhs < o.rhs;
    return static_cast<int>(rel) < static_cast<int>(o.rel);
  }
};

RowKey key_of(const LinRow& row) {
  RowKey k;
  for (auto& [v, c] : row.terms) k.terms.emplace_back(v, rat_to_string(c));
  k.rhs = rat_to_string(row.rhs);
  k.rel = row.rel;
  return k;
}

std::vector<LinRow> dedup(std::vector<LinRow> rows) {
  // Exact duplicates collapse; same-profile Le/Lt rows keep only the tightest.
  std::map<std::vector<std::pair<std::string, std::string>>, size_t> best_ineq;
  std::set<RowKey> seen;
  std::vector<LinRow> out;
  for (auto& row : rows) {
    RowKey k = key_of(row);
    if (row.rel == Rel::Eq || row.terms.empty()) {
      if (seen.insert(k).second) out.push_back(row);
      continue;
    }
    auto it = best_ineq.find(k.terms);
    if (it == best_ineq.end()) {
      best_ineq[k.terms] = out.size();
      out.push_back(row);
      continue;
    }
    LinRow& prev = out[it->second];
    bool replace = row.rhs < prev.rhs ||
                   (row.rhs == prev.rhs && row.rel == Rel::Lt && prev.rel == Rel::Le);
    if (replace) prev = row;
  }
  // Drop tautological ground rows (0 <= 5); contradictions must survive.
  std::vector<LinRow> cleaned;
  for (auto& row : out)
    if (!row.terms.empty() || !ground_holds(row)) cleaned.push_back(row);
  return cleaned;
}

}  // namespace

std::vector<LinRow> fm_simplify(std::vector<LinRow> rows) {
  for (auto& r : rows) r = canonical(std::move(r));
  return dedup(std::move(rows));
}

LinRow make_row(std::vector<std::pair<std::string, Rat>> terms, Rat rhs, Rel rel) {
  LinRow r;
  r.terms = std::move(terms);
  r.rhs = std::move(rhs);
  r.rel = rel;
  return canonical(std::move(r));
}

std::vector<LinRow> fm_eliminate(std::vector<LinRow> rows, const std::string& var) {
  for (auto& r : rows) r = canonical(std::move(r));

  // Gauss step: an equality mentioning var pins it exactly.
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].rel != Rel::Eq) continue;
    auto c = coeff_of(rows[i], var);
    if (!c) continue;
    LinRow def = drop_var(rows[i], var);  // var = (rhs - def.terms) / c
    std::vector<LinRow> out;
    for (size_t j = 0; j < rows.size(); ++j) {
      if (j == i) continue;
      auto cj = coeff_of(rows[j], var);
      if (!cj) {
        out.push_back(rows[j]);
        continue;
      }
      LinRow r = drop_var(rows[j], var);
      Rat k = *cj / *c;
      for (auto& [v, coef] : def.terms) r.terms.emplace_back(v, -k * coef);
      r.rhs -= k * def.rhs;
      out.push_back(canonical(std::move(r)));
    }
    return dedup(std::move(out));
  }

  std::vector<LinRow> uppers, lowers, rest;
  for (auto& row : rows) {
    auto c = coeff_of(row, var);
    if (!c) {
      rest.push_back(row);
      continue;
    }
    // Divide through by |c|: c>0 gives var <= bound, c<0 gives var >= bound.
    LinRow b = drop_var(row, var);
    Rat a = boost::multiprecision::abs(Rat(*c));
    for (auto& [v, coef] : b.terms) coef /= a;
    b.rhs /= a;
    (*c > 0 ? uppers : lowers).push_back(std::move(b));
  }
  std::vector<LinRow> out = std::move(rest);
  for (auto& lo : lowers) {
    for (auto& up : uppers) {
      // lower: var >= rhs_lo - terms_lo (sign-flipped form below)
      // upper: var <= rhs_up - terms_up
      // combined: (rhs_lo - terms_lo) REL (rhs_up - terms_up)
      LinRow r;
      r.rel = (lo.rel == Rel::Lt || up.rel == Rel::Lt) ? Rel::Lt : Rel::Le;
      // lo came from  -var <= b  i.e.  var >= -b + terms... keep algebra direct:
      // lower row encoded as terms_lo + rhs_lo with var coefficient -1 removed:
      //   -var + terms_lo REL rhs_lo   =>   var >= terms_lo - rhs_lo
      // upper row:  var + terms_up REL rhs_up  =>  var <= rhs_up - terms_up
      // need: terms_lo - rhs_lo REL rhs_up - terms_up
      //   =>  terms_lo + terms_up REL rhs_lo + rhs_up
      r.terms = lo.terms;
      for (auto& [v, c] : up.terms) r.terms.emplace_back(v, c);
      r.rhs = lo.rhs + up.rhs;
      out.push_back(canonical(std::move(r)));
    }
  }
  return dedup(std::move(out));
}

bool fm_satisfiable(std::vector<LinRow> rows) {
  for (auto& r : rows) r = canonical(std::move(r));
  while (true) {
    std::string var;
    for (auto& row : rows)
      if (!row.terms.empty()) {
        var = row.terms.front().first;
        break;
      }
    if (var.empty()) break;
    rows = fm_eliminate(std::move(rows), var);
  }
  for (auto& row : rows)
    if (!ground_holds(row)) return false;
  return true;
}

bool RatInterval::contains(const Rat& v) const {
  if (empty) return false;
  if (lo && (v < *lo || (lo_strict && v == *lo))) return false;
  if (hi && (v > *hi || (hi_strict && v == *hi))) return false;
  return true;
}

RatInterval fm_interval(std::vector<LinRow> rows, const std::string& var) {
  for (auto& r : rows) r = canonical(std::move(r));
  while (true) {
    std::string other;
    for (auto& row : rows)
      for (auto& [v, c] : row.terms)
        if (v != var) {
          other = v;
          break;
        }
    if (other.empty()) break;
    rows = fm_eliminate(std::move(rows), other);
  }
  RatInterval iv;
  for (auto& row : rows) {
    if (row.terms.empty()) {
      if (!ground_holds(row)) {
        iv.empty = true;
        return iv;
      }
      continue;
    }
    Rat a = row.terms.front().second;
    Rat bound = row.rhs / a;
    bool strict = row.rel == Rel::Lt;
    if (row.rel == Rel::Eq) {
      if ((iv.lo && (bound < *iv.lo || (iv.lo_strict && bound == *iv.lo))) ||
          (iv.hi && (bound > *iv.hi || (iv.hi_strict && bound == *iv.hi)))) {
        iv.empty = true;
        return iv;
      }
      iv.lo = iv.hi = bound;
      iv.lo_strict = iv.hi_strict = false;
      continue;
    }
    if (a > 0) {
      if (!iv.hi || bound < *iv.hi || (bound == *iv.hi && strict)) {
        iv.hi = bound;
        iv.hi_strict = strict;
      }
    } else {
      if (!iv.lo || bound > *iv.lo || (bound == *iv.lo && strict)) {
        iv.lo = bound;
        iv.lo_strict = strict;
      }
    }
  }
  if (iv.lo && iv.hi) {
    if (*iv.lo > *iv.hi || (*iv.lo == *iv.hi && (iv.lo_strict || iv.hi_strict)))
      iv.empty = true;
  }
  return iv;
}

bool row_satisfied(const LinRow& row,
                   const std::vector<std::pair<std::string, Rat>>& values) {
  Rat lhs = 0;
  for (auto& [v, c] : row.terms) {
    for (auto& [name, val] : values)
      if (name == v) {
        lhs += c * val;
        break;
      }
  }
  switch (row.rel) {
    case Rel::Eq:
      return lhs == row.rhs;
    case Rel::Le:
      return lhs <= row.rhs;
    case Rel::Lt:
      return lhs < row.rhs;
  }
  return false;
}

}  // namespace hytccp
