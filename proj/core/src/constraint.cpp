#include "hytccp/constraint.hpp"

#include <algorithm>
#include <atomic>
#include <functional>

namespace hytccp {

namespace {
std::atomic<uint64_t> anon_counter{0};
}

std::string fresh_anon_name() { return "~a" + std::to_string(++anon_counter); }

bool is_anon_name(const std::string& name) { return !name.empty() && name[0] == '~'; }

namespace {

using VarNameMap = std::function<std::string(const VarRef&)>;

std::string term_display(const TermPtr& t, const VarNameMap& mapper) {
  switch (t->kind()) {
    case Term::Kind::Num:
      return rat_to_string(t->num_value());
    case Term::Kind::Var:
      return mapper(t->var_ref());
    case Term::Kind::Sym:
      return t->sym_name();
    case Term::Kind::Nil:
      return "[]";
    case Term::Kind::Cell: {
      std::string out = "[" + term_display(t->head(), mapper);
      TermPtr cur = t->tail();
      while (cur->kind() == Term::Kind::Cell) {
        out += "," + term_display(cur->head(), mapper);
        cur = cur->tail();
      }
      if (cur->kind() == Term::Kind::Nil) return out + "]";
      return out + "|" + term_display(cur, mapper) + "]";
    }
  }
  return "?";
}

std::string plain_name(const VarRef& v) { return v.name; }

std::string row_sort_key(const LinRow& row) {
  std::string k;
  for (auto& [v, c] : row.terms) k += v + "*" + rat_to_string(c) + ",";
  k += "|" + std::to_string(static_cast<int>(row.rel)) + "|" + rat_to_string(row.rhs);
  return k;
}

std::string eq_sort_key(const TermEq& e) {
  return term_display(e.lhs, plain_name) + "=" + term_display(e.rhs, plain_name);
}

std::string neq_sort_key(const TermNeq& n) {
  return term_display(n.lhs, plain_name) + "!=" + term_display(n.rhs, plain_name);
}

void collect_var_refs(const TermPtr& t, std::vector<VarRef>& out) {
  switch (t->kind()) {
    case Term::Kind::Var:
      out.push_back(t->var_ref());
      break;
    case Term::Kind::Cell:
      collect_var_refs(t->head(), out);
      collect_var_refs(t->tail(), out);
      break;
    default:
      break;
  }
}

TermPtr rename_vars_in_term(const TermPtr& t,
                            const std::map<std::string, std::string>& ren) {
  switch (t->kind()) {
    case Term::Kind::Var: {
      auto it = ren.find(t->var_ref().name);
      if (it == ren.end()) return t;
      VarRef v = t->var_ref();
      v.name = it->second;
      v.anonymous = is_anon_name(it->second);
      return Term::var(v);
    }
    case Term::Kind::Cell: {
      TermPtr h = rename_vars_in_term(t->head(), ren);
      TermPtr tl = rename_vars_in_term(t->tail(), ren);
      if (h.get() == t->head().get() && tl.get() == t->tail().get()) return t;
      return Term::cell(h, tl);
    }
    default:
      return t;
  }
}

// --- one-way matching, used to refute disequations --------------------------

using PinFn = std::function<std::optional<Rat>(const std::string&)>;

struct Matcher {
  const std::set<std::string>& flex;
  const PinFn& pin;
  std::map<std::string, TermPtr> bind;

  TermPtr walk(TermPtr t) {
    while (t->kind() == Term::Kind::Var && flex.count(t->var_ref().name)) {
      auto it = bind.find(t->var_ref().name);
      if (it == bind.end()) return t;
      t = it->second;
    }
    return t;
  }

  bool occurs(const std::string& name, TermPtr t) {
    t = walk(t);
    switch (t->kind()) {
      case Term::Kind::Var:
        return t->var_ref().name == name;
      case Term::Kind::Cell:
        return occurs(name, t->head()) || occurs(name, t->tail());
      default:
        return false;
    }
  }

  bool match(TermPtr a, TermPtr b) {
    a = walk(a);
    b = walk(b);
    if (a->kind() == Term::Kind::Var && flex.count(a->var_ref().name)) {
      if (b->kind() == Term::Kind::Var && b->var_ref().name == a->var_ref().name) return true;
      if (occurs(a->var_ref().name, b)) return false;
      bind[a->var_ref().name] = b;
      return true;
    }
    if (b->kind() == Term::Kind::Var && flex.count(b->var_ref().name)) return match(b, a);
    if (a->kind() != b->kind()) {
      // a variable the linear part pins to a point is forced equal to that number
      auto pin_vs_num = [&](const TermPtr& v, const TermPtr& n) {
        if (v->kind() != Term::Kind::Var || n->kind() != Term::Kind::Num) return false;
        auto p = pin(v->var_ref().name);
        return p && *p == n->num_value();
      };
      return pin_vs_num(a, b) || pin_vs_num(b, a);
    }
    switch (a->kind()) {
      case Term::Kind::Num:
        return a->num_value() == b->num_value();
      case Term::Kind::Var: {
        if (a->var_ref().name == b->var_ref().name) return true;
        auto pa = pin(a->var_ref().name), pb = pin(b->var_ref().name);
        return pa && pb && *pa == *pb;
      }
      case Term::Kind::Sym:
        return a->sym_name() == b->sym_name();
      case Term::Kind::Nil:
        return true;
      case Term::Kind::Cell:
        return match(a->head(), b->head()) && match(a->tail(), b->tail());
    }
    return false;
  }
};

bool forces_equal(const TermPtr& l, const TermPtr& r, const std::set<std::string>& flex,
                  const PinFn& pin) {
  Matcher m{flex, pin, {}};
  return m.match(l, r);
}

}  // namespace

// Friend of Constraint: owns normalization and raw part access.
class Normalizer {
public:
  struct Raw {
    std::vector<LinRow> rows;
    std::vector<TermEq> eqs;
    std::vector<TermNeq> neqs;
    std::set<std::string> sigs;
  };

  static Raw parts_of(const Constraint& c) {
    Raw raw;
    raw.rows = c.linear_;
    raw.eqs = c.eqs_;
    raw.neqs = c.neqs_;
    raw.sigs = c.signals_;
    return raw;
  }

  static Constraint assemble(std::vector<LinRow> rows, std::vector<TermEq> eqs,
                             std::vector<TermNeq> neqs, std::set<std::string> sigs) {
    Constraint c;
    c.linear_ = std::move(rows);
    c.eqs_ = std::move(eqs);
    c.neqs_ = std::move(neqs);
    c.signals_ = std::move(sigs);
    return c;
  }

  // Existential anon names of a raw soup (pattern placeholders excluded).
  static std::set<std::string> raw_anons(const Raw& raw) {
    std::set<std::string> anons;
    std::vector<VarRef> refs;
    for (auto& e : raw.eqs) {
      collect_var_refs(e.lhs, refs);
      collect_var_refs(e.rhs, refs);
    }
    for (auto& n : raw.neqs) {
      std::vector<VarRef> side;
      collect_var_refs(n.lhs, side);
      collect_var_refs(n.rhs, side);
      for (auto& r : side)
        if (!n.pattern_vars.count(r.name)) refs.push_back(r);
    }
    for (auto& r : refs)
      if (r.anonymous || is_anon_name(r.name)) anons.insert(r.name);
    return anons;
  }

  static void rename_raw(Raw& raw, const std::map<std::string, std::string>& ren) {
    for (auto& row : raw.rows)
      for (auto& [v, c] : row.terms) {
        auto it = ren.find(v);
        if (it != ren.end()) v = it->second;
      }
    for (auto& e : raw.eqs) {
      e.lhs = rename_vars_in_term(e.lhs, ren);
      e.rhs = rename_vars_in_term(e.rhs, ren);
    }
    for (auto& n : raw.neqs) {
      n.lhs = rename_vars_in_term(n.lhs, ren);
      n.rhs = rename_vars_in_term(n.rhs, ren);
      std::set<std::string> pat;
      for (auto& p : n.pattern_vars) {
        auto it = ren.find(p);
        pat.insert(it == ren.end() ? p : it->second);
      }
      n.pattern_vars = std::move(pat);
    }
  }

  static std::optional<Constraint> normalize(Raw raw, bool reindex = true);
};

namespace {

// Union-find over variable names with structural bindings; the working core
// of unification and of the sandbox unifiability test.
class UF {
public:
  std::map<std::string, std::string> parent;
  std::map<std::string, TermPtr> structure;
  std::map<std::string, VarKind> kind;
  std::map<std::string, bool> anon;

  bool registered(const std::string& n) const { return parent.count(n) > 0; }

  void reg(const VarRef& v) {
    if (parent.emplace(v.name, v.name).second) {
      kind[v.name] = v.kind;
      anon[v.name] = v.anonymous || is_anon_name(v.name);
    }
  }

  void reg_term(const TermPtr& t, const std::set<std::string>* skip = nullptr) {
    switch (t->kind()) {
      case Term::Kind::Var:
        if (!skip || !skip->count(t->var_ref().name)) reg(t->var_ref());
        break;
      case Term::Kind::Cell:
        reg_term(t->head(), skip);
        reg_term(t->tail(), skip);
        break;
      default:
        break;
    }
  }

  std::string find(const std::string& x) {
    auto it = parent.find(x);
    if (it == parent.end() || it->second == x) return x;
    std::string root = find(it->second);
    parent[x] = root;
    return root;
  }

  TermPtr walk(TermPtr t) {
    while (t->kind() == Term::Kind::Var && registered(t->var_ref().name)) {
      std::string r = find(t->var_ref().name);
      auto it = structure.find(r);
      if (it != structure.end()) {
        t = it->second;
        continue;
      }
      if (t->var_ref().name == r) return t;
      VarRef v = t->var_ref();
      v.name = r;
      v.anonymous = anon[r];
      return Term::var(v);
    }
    return t;
  }

  bool occurs(const std::string& root, TermPtr t) {
    t = walk(t);
    switch (t->kind()) {
      case Term::Kind::Var:
        return registered(t->var_ref().name) ? find(t->var_ref().name) == root
                                             : t->var_ref().name == root;
      case Term::Kind::Cell:
        return occurs(root, t->head()) || occurs(root, t->tail());
      default:
        return false;
    }
  }

  bool unify(TermPtr a, TermPtr b) {
    a = walk(a);
    b = walk(b);
    bool av = a->kind() == Term::Kind::Var && registered(a->var_ref().name);
    bool bv = b->kind() == Term::Kind::Var && registered(b->var_ref().name);
    if (av && bv) {
      std::string ra = find(a->var_ref().name), rb = find(b->var_ref().name);
      if (ra != rb) parent[rb] = ra;
      return true;
    }
    if (av) {
      std::string ra = find(a->var_ref().name);
      if (occurs(ra, b)) return false;
      structure[ra] = b;
      return true;
    }
    if (bv) return unify(b, a);
    if (a->kind() != b->kind()) return false;
    switch (a->kind()) {
      case Term::Kind::Num:
        return a->num_value() == b->num_value();
      case Term::Kind::Sym:
        return a->sym_name() == b->sym_name();
      case Term::Kind::Nil:
        return true;
      case Term::Kind::Cell:
        return unify(a->head(), b->head()) && unify(a->tail(), b->tail());
      case Term::Kind::Var:
        return a->var_ref().name == b->var_ref().name;  // both unregistered
    }
    return false;
  }

  // -- classification after unification --

  std::map<std::string, std::vector<std::string>> members;
  std::map<std::string, std::string> final_name;
  std::map<std::string, bool> class_all_anon;

  void finalize_classes() {
    for (auto& [name, p] : parent) members[find(name)].push_back(name);
    for (auto& [root, mem] : members) {
      std::sort(mem.begin(), mem.end());
      std::string best;
      bool all_anon = true;
      for (auto& m : mem)
        if (!anon[m]) {
          all_anon = false;
          if (best.empty()) best = m;
        }
      if (best.empty()) best = mem.front();
      final_name[root] = best;
      class_all_anon[root] = all_anon;
    }
  }

  std::optional<Rat> num_value(const std::string& root) const {
    auto it = structure.find(root);
    if (it != structure.end() && it->second->kind() == Term::Kind::Num)
      return it->second->num_value();
    return std::nullopt;
  }

  // Shallow emission: variables become class representatives, numeric
  // bindings and anonymous-only chains are inlined.
  TermPtr emit(const TermPtr& t) {
    switch (t->kind()) {
      case Term::Kind::Var: {
        if (!registered(t->var_ref().name)) return t;  // pattern placeholder
        std::string r = find(t->var_ref().name);
        auto it = structure.find(r);
        if (it != structure.end()) {
          if (it->second->kind() == Term::Kind::Num) return it->second;
          if (class_all_anon[r]) return emit_structure(it->second);
        }
        VarRef v;
        v.name = final_name[r];
        v.kind = kind[v.name];
        v.anonymous = anon[v.name];
        return Term::var(v);
      }
      case Term::Kind::Cell:
        return Term::cell(emit(t->head()), emit(t->tail()));
      default:
        return t;
    }
  }

  TermPtr emit_structure(const TermPtr& s) {
    if (s->kind() == Term::Kind::Cell) return Term::cell(emit(s->head()), emit(s->tail()));
    return s;
  }

  // Full resolution: every bound variable is replaced by its structure,
  // recursively. Bindings are acyclic (occurs check), so this terminates.
  TermPtr deep(const TermPtr& t) {
    switch (t->kind()) {
      case Term::Kind::Var: {
        if (!registered(t->var_ref().name)) return t;  // pattern placeholder
        std::string r = find(t->var_ref().name);
        auto it = structure.find(r);
        if (it != structure.end()) {
          if (it->second->kind() == Term::Kind::Num) return it->second;
          return deep_structure(it->second);
        }
        VarRef v;
        v.name = final_name[r];
        v.kind = kind[v.name];
        v.anonymous = anon[v.name];
        return Term::var(v);
      }
      case Term::Kind::Cell:
        return Term::cell(deep(t->head()), deep(t->tail()));
      default:
        return t;
    }
  }

  TermPtr deep_structure(const TermPtr& s) {
    if (s->kind() == Term::Kind::Cell) return Term::cell(deep(s->head()), deep(s->tail()));
    return s;
  }
};

}  // namespace

std::optional<Constraint> Normalizer::normalize(Raw raw, bool reindex) {
  UF N;
  for (auto& e : raw.eqs) {
    N.reg_term(e.lhs);
    N.reg_term(e.rhs);
  }
  for (auto& n : raw.neqs) {
    N.reg_term(n.lhs, &n.pattern_vars);
    N.reg_term(n.rhs, &n.pattern_vars);
  }
  for (auto& row : raw.rows)
    for (auto& [v, c] : row.terms)
      N.reg(VarRef{v, VarKind::Discrete, is_anon_name(v)});

  for (auto& e : raw.eqs)
    if (!N.unify(e.lhs, e.rhs)) return std::nullopt;

  N.finalize_classes();

  // Linear part: substitute class reps and numeric bindings, add pins, then
  // decide satisfiability exactly.
  std::vector<LinRow> rows;
  for (auto& row : raw.rows) {
    std::vector<std::pair<std::string, Rat>> terms;
    Rat rhs = row.rhs;
    bool ill_typed = false;
    for (auto& [v, c] : row.terms) {
      std::string root = N.find(v);
      if (auto q = N.num_value(root)) {
        rhs -= c * *q;
        continue;
      }
      if (N.structure.count(root)) {
        ill_typed = true;  // numeric comparison on a variable bound to a tree
        break;
      }
      terms.emplace_back(N.final_name[root], c);
    }
    if (ill_typed) return std::nullopt;
    rows.push_back(make_row(std::move(terms), std::move(rhs), row.rel));
  }
  for (auto& [root, mem] : N.members) {
    auto q = N.num_value(root);
    if (!q) continue;
    for (auto& m : mem)
      if (!N.anon[m]) rows.push_back(make_row({{m, Rat(1)}}, *q, Rel::Eq));
  }
  rows = fm_simplify(std::move(rows));
  if (!fm_satisfiable(rows)) return std::nullopt;

  std::map<std::string, std::optional<Rat>> pin_cache;
  PinFn pin = [&](const std::string& name) -> std::optional<Rat> {
    auto it = pin_cache.find(name);
    if (it != pin_cache.end()) return it->second;
    std::optional<Rat> val;
    RatInterval iv = fm_interval(rows, name);
    if (!iv.empty && iv.lo && iv.hi && *iv.lo == *iv.hi && !iv.lo_strict && !iv.hi_strict)
      val = *iv.lo;
    pin_cache[name] = val;
    return val;
  };

  // Term equations in binding form: aliases to the representative plus one
  // structural binding per class.
  std::vector<TermEq> eqs;
  for (auto& [root, mem] : N.members) {
    if (N.num_value(root)) continue;
    std::vector<std::string> named;
    for (auto& m : mem)
      if (!N.anon[m]) named.push_back(m);
    if (named.empty()) continue;  // anonymous chains live inlined at use sites
    const std::string& rep = named.front();
    auto mkvar = [&](const std::string& n) { return Term::var(VarRef{n, N.kind[n], false}); };
    for (size_t i = 1; i < named.size(); ++i) eqs.push_back({mkvar(named[i]), mkvar(rep)});
    auto it = N.structure.find(root);
    if (it != N.structure.end()) eqs.push_back({mkvar(rep), N.emit_structure(it->second)});
  }

  // Disequations: refute against the store, drop unviolatable ones. All of
  // it runs on fully resolved sides, and storage keeps those too: distinct
  // routes to one constraint (assert the structure first or last) must land
  // on identical atoms.
  std::vector<TermNeq> neqs;
  for (auto& n : raw.neqs) {
    TermPtr dl = N.deep(n.lhs);
    TermPtr dr = N.deep(n.rhs);
    if (forces_equal(dl, dr, n.pattern_vars, pin)) return std::nullopt;
    UF sandbox;
    sandbox.reg_term(dl);
    sandbox.reg_term(dr);
    if (!sandbox.unify(dl, dr)) continue;  // can never be violated: redundant
    TermNeq out;
    out.lhs = std::move(dl);
    out.rhs = std::move(dr);
    out.pattern_vars = n.pattern_vars;
    if (compare_terms(out.rhs, out.lhs) < 0) std::swap(out.lhs, out.rhs);
    neqs.push_back(std::move(out));
  }

  // Collapse duplicates that differ only in placeholder naming; a surviving
  // duplicate would also shield shared anons from the vacuity rule below.
  {
    std::set<std::string> seen;
    std::vector<TermNeq> unique_neqs;
    for (auto& n : neqs) {
      std::map<std::string, std::string> can;
      int next = 0;
      for (auto side : {n.lhs, n.rhs}) {
        std::vector<VarRef> refs;
        collect_var_refs(side, refs);
        for (auto& r : refs)
          if (n.pattern_vars.count(r.name) && !can.count(r.name))
            can[r.name] = "~q" + std::to_string(++next);
      }
      std::string key = term_to_string(rename_vars_in_term(n.lhs, can)) + "\x01" +
                        term_to_string(rename_vars_in_term(n.rhs, can));
      if (seen.insert(key).second) unique_neqs.push_back(std::move(n));
    }
    neqs = std::move(unique_neqs);
  }

  // An existential anon confined to one side of a single disequation makes
  // it vacuous: some instantiation of the anon always breaks the equality.
  for (bool changed = true; changed;) {
    changed = false;
    std::set<std::string> eq_anons;
    {
      std::vector<VarRef> refs;
      for (auto& e : eqs) {
        collect_var_refs(e.lhs, refs);
        collect_var_refs(e.rhs, refs);
      }
      for (auto& r : refs)
        if (r.anonymous) eq_anons.insert(r.name);
    }
    std::vector<std::set<std::string>> neq_l(neqs.size()), neq_r(neqs.size());
    for (size_t i = 0; i < neqs.size(); ++i) {
      std::vector<VarRef> lv, rv;
      collect_var_refs(neqs[i].lhs, lv);
      collect_var_refs(neqs[i].rhs, rv);
      for (auto& r : lv)
        if (r.anonymous && !neqs[i].pattern_vars.count(r.name)) neq_l[i].insert(r.name);
      for (auto& r : rv)
        if (r.anonymous && !neqs[i].pattern_vars.count(r.name)) neq_r[i].insert(r.name);
    }
    for (size_t i = 0; i < neqs.size() && !changed; ++i) {
      auto solitary_on = [&](const std::set<std::string>& mine,
                             const std::set<std::string>& other) {
        for (auto& name : mine) {
          if (eq_anons.count(name) || other.count(name)) continue;
          bool elsewhere = false;
          for (size_t j = 0; j < neqs.size() && !elsewhere; ++j)
            if (j != i && (neq_l[j].count(name) || neq_r[j].count(name))) elsewhere = true;
          if (!elsewhere) return true;
        }
        return false;
      };
      if (solitary_on(neq_l[i], neq_r[i]) || solitary_on(neq_r[i], neq_l[i])) {
        neqs.erase(neqs.begin() + i);
        changed = true;
      }
    }
  }

  auto sort_all = [&]() {
    std::sort(eqs.begin(), eqs.end(),
              [](const TermEq& a, const TermEq& b) { return eq_sort_key(a) < eq_sort_key(b); });
    std::sort(neqs.begin(), neqs.end(), [](const TermNeq& a, const TermNeq& b) {
      return neq_sort_key(a) < neq_sort_key(b);
    });
    std::sort(rows.begin(), rows.end(),
              [](const LinRow& a, const LinRow& b) { return row_sort_key(a) < row_sort_key(b); });
  };
  sort_all();

  if (reindex) {
    // Renumber existential anons by first occurrence so semantically equal
    // builds produce byte-identical storage.
    std::map<std::string, std::string> ren;
    int next = 0;
    auto visit = [&](const TermPtr& t, const std::set<std::string>* pat) {
      std::vector<VarRef> refs;
      collect_var_refs(t, refs);
      for (auto& r : refs) {
        if (!r.anonymous) continue;
        if (pat && pat->count(r.name)) continue;
        if (!ren.count(r.name)) ren[r.name] = "~" + std::to_string(++next);
      }
    };
    for (auto& e : eqs) {
      visit(e.lhs, nullptr);
      visit(e.rhs, nullptr);
    }
    for (auto& n : neqs) {
      visit(n.lhs, &n.pattern_vars);
      visit(n.rhs, &n.pattern_vars);
    }
    for (auto& e : eqs) {
      e.lhs = rename_vars_in_term(e.lhs, ren);
      e.rhs = rename_vars_in_term(e.rhs, ren);
    }
    for (auto& n : neqs) {
      std::map<std::string, std::string> pren = ren;
      int pnext = 0;
      std::vector<VarRef> refs;
      collect_var_refs(n.lhs, refs);
      collect_var_refs(n.rhs, refs);
      for (auto& r : refs)
        if (n.pattern_vars.count(r.name) && !pren.count(r.name))
          pren[r.name] = "~p" + std::to_string(++pnext);
      n.lhs = rename_vars_in_term(n.lhs, pren);
      n.rhs = rename_vars_in_term(n.rhs, pren);
      std::set<std::string> newpat;
      for (auto& p : n.pattern_vars) newpat.insert(pren.count(p) ? pren.at(p) : p);
      n.pattern_vars = std::move(newpat);
    }
    sort_all();
  }

  return Normalizer::assemble(std::move(rows), std::move(eqs), std::move(neqs),
                              std::move(raw.sigs));
}

// --- public constructors -----------------------------------------------------

Constraint Constraint::falsity() {
  Constraint c;
  c.false_ = true;
  return c;
}

bool Constraint::is_true() const {
  return !false_ && linear_.empty() && eqs_.empty() && neqs_.empty() && signals_.empty();
}

Constraint Constraint::lin(LinRow row) {
  Normalizer::Raw raw;
  raw.rows.push_back(std::move(row));
  auto c = Normalizer::normalize(std::move(raw));
  return c ? *c : falsity();
}

Constraint Constraint::eq(TermPtr l, TermPtr r) {
  Normalizer::Raw raw;
  raw.eqs.push_back({std::move(l), std::move(r)});
  auto c = Normalizer::normalize(std::move(raw));
  return c ? *c : falsity();
}

Constraint Constraint::neq(TermPtr l, TermPtr r, std::set<std::string> pattern_vars) {
  Normalizer::Raw raw;
  raw.neqs.push_back({std::move(l), std::move(r), std::move(pattern_vars)});
  auto c = Normalizer::normalize(std::move(raw));
  return c ? *c : falsity();
}

Constraint Constraint::signal(std::string name) {
  Normalizer::Raw raw;
  raw.sigs.insert(std::move(name));
  auto c = Normalizer::normalize(std::move(raw));
  return c ? *c : falsity();
}

// --- queries -----------------------------------------------------------------

std::set<std::string> Constraint::named_vars() const {
  std::set<std::string> out;
  std::vector<VarRef> refs;
  for (auto& e : eqs_) {
    collect_var_refs(e.lhs, refs);
    collect_var_refs(e.rhs, refs);
  }
  for (auto& n : neqs_) {
    std::vector<VarRef> side;
    collect_var_refs(n.lhs, side);
    collect_var_refs(n.rhs, side);
    for (auto& r : side)
      if (!n.pattern_vars.count(r.name)) refs.push_back(r);
  }
  for (auto& r : refs)
    if (!r.anonymous) out.insert(r.name);
  for (auto& row : linear_)
    for (auto& [v, c] : row.terms)
      if (!is_anon_name(v)) out.insert(v);
  return out;
}

std::set<std::string> Constraint::all_vars() const {
  std::set<std::string> out = named_vars();
  std::vector<VarRef> refs;
  for (auto& e : eqs_) {
    collect_var_refs(e.lhs, refs);
    collect_var_refs(e.rhs, refs);
  }
  for (auto& n : neqs_) {
    std::vector<VarRef> side;
    collect_var_refs(n.lhs, side);
    collect_var_refs(n.rhs, side);
    for (auto& r : side)
      if (!n.pattern_vars.count(r.name)) refs.push_back(r);
  }
  for (auto& r : refs) out.insert(r.name);
  for (auto& row : linear_)
    for (auto& [v, c] : row.terms) out.insert(v);
  return out;
}

TermPtr Constraint::resolve(const TermPtr& t) const {
  std::map<std::string, TermPtr> bind;
  for (auto& e : eqs_) bind[e.lhs->var_ref().name] = e.rhs;
  std::function<TermPtr(const TermPtr&)> go = [&](const TermPtr& u) -> TermPtr {
    switch (u->kind()) {
      case Term::Kind::Var: {
        auto it = bind.find(u->var_ref().name);
        if (it == bind.end()) return u;
        return go(it->second);
      }
      case Term::Kind::Cell:
        return Term::cell(go(u->head()), go(u->tail()));
      default:
        return u;
    }
  };
  return go(t);
}

TermPtr Constraint::resolve_name(const std::string& name) const {
  return resolve(Term::var(VarRef{name, VarKind::Discrete, is_anon_name(name)}));
}

std::optional<Rat> Constraint::pinned_value(const std::string& name) const {
  if (false_) return std::nullopt;
  RatInterval iv = fm_interval(linear_, name);
  if (!iv.empty && iv.lo && iv.hi && *iv.lo == *iv.hi && !iv.lo_strict && !iv.hi_strict)
    return *iv.lo;
  return std::nullopt;
}

bool Constraint::operator==(const Constraint& o) const {
  if (false_ != o.false_) return false;
  if (signals_ != o.signals_) return false;
  if (linear_.size() != o.linear_.size() || eqs_.size() != o.eqs_.size() ||
      neqs_.size() != o.neqs_.size())
    return false;
  for (size_t i = 0; i < linear_.size(); ++i) {
    if (linear_[i].rel != o.linear_[i].rel || linear_[i].rhs != o.linear_[i].rhs ||
        linear_[i].terms != o.linear_[i].terms)
      return false;
  }
  for (size_t i = 0; i < eqs_.size(); ++i)
    if (!terms_identical(eqs_[i].lhs, o.eqs_[i].lhs) ||
        !terms_identical(eqs_[i].rhs, o.eqs_[i].rhs))
      return false;
  for (size_t i = 0; i < neqs_.size(); ++i)
    if (!terms_identical(neqs_[i].lhs, o.neqs_[i].lhs) ||
        !terms_identical(neqs_[i].rhs, o.neqs_[i].rhs) ||
        neqs_[i].pattern_vars != o.neqs_[i].pattern_vars)
      return false;
  return true;
}

// --- lattice operations --------------------------------------------------------

Constraint conjoin(const Constraint& a, const Constraint& b) {
  if (a.is_false() || b.is_false()) return Constraint::falsity();
  Normalizer::Raw ra = Normalizer::parts_of(a);
  Normalizer::Raw rb = Normalizer::parts_of(b);
  // The two sides' existential anons are distinct binders even when storage
  // names collide; rename b's apart.
  std::map<std::string, std::string> ren;
  for (auto& name : Normalizer::raw_anons(rb)) ren[name] = fresh_anon_name();
  if (!ren.empty()) Normalizer::rename_raw(rb, ren);
  Normalizer::Raw raw = std::move(ra);
  for (auto& r : rb.rows) raw.rows.push_back(std::move(r));
  for (auto& e : rb.eqs) raw.eqs.push_back(std::move(e));
  for (auto& n : rb.neqs) raw.neqs.push_back(std::move(n));
  for (auto& s : rb.sigs) raw.sigs.insert(s);
  auto c = Normalizer::normalize(std::move(raw));
  return c ? *c : Constraint::falsity();
}

namespace {

// Conjunction of c with one negated linear branch, decided by FM alone.
bool linear_branch_unsat(const Constraint& c, LinRow neg) {
  std::vector<LinRow> rows = c.linear();
  rows.push_back(std::move(neg));
  return !fm_satisfiable(std::move(rows));
}

bool numericish(const Constraint& c, const TermPtr& t) {
  if (t->kind() == Term::Kind::Num) return true;
  if (t->kind() != Term::Kind::Var) return false;
  if (t->var_ref().kind == VarKind::Continuous) return true;
  for (auto& row : c.linear())
    for (auto& [v, k] : row.terms)
      if (v == t->var_ref().name) return true;
  return false;
}

std::pair<std::vector<std::pair<std::string, Rat>>, Rat> diff_terms(const TermPtr& l,
                                                                    const TermPtr& r) {
  // l - r as linear terms plus constant; callers guarantee Var/Num leaves.
  std::vector<std::pair<std::string, Rat>> terms;
  Rat constant = 0;
  auto add = [&](const TermPtr& t, int sign) {
    if (t->kind() == Term::Kind::Num)
      constant += sign * t->num_value();
    else
      terms.emplace_back(t->var_ref().name, Rat(sign));
  };
  add(l, 1);
  add(r, -1);
  return {std::move(terms), std::move(constant)};
}

}  // namespace

LinRow resolve_row(const Constraint& c, const LinRow& row) {
  LinRow out;
  out.rel = row.rel;
  out.rhs = row.rhs;
  for (auto& [v, k] : row.terms) {
    TermPtr r = c.resolve_name(v);
    if (r->kind() == Term::Kind::Num) {
      out.rhs -= k * r->num_value();
    } else if (r->kind() == Term::Kind::Var) {
      out.terms.emplace_back(r->var_ref().name, k);
    } else {
      // variable bound to a tree: leave it, the comparison can then never
      // be forced, which is the conservative answer for an ill-sorted mix
      out.terms.emplace_back(v, k);
    }
  }
  return make_row(std::move(out.terms), std::move(out.rhs), out.rel);
}

bool entails(const Constraint& c, const Constraint& d) {
  if (c.is_false()) return true;
  if (d.is_false()) return false;

  for (auto& s : d.signals())
    if (!c.signals().count(s)) return false;

  for (auto& row : d.linear()) {
    LinRow q = resolve_row(c, row);
    if (q.terms.empty()) {
      bool holds = false;
      switch (q.rel) {
        case Rel::Eq:
          holds = q.rhs == 0;
          break;
        case Rel::Le:
          holds = q.rhs >= 0;
          break;
        case Rel::Lt:
          holds = q.rhs > 0;
          break;
      }
      if (!holds) return false;
      continue;
    }
    auto negated = [&](bool upper) {
      // upper: terms > rhs  i.e.  -terms < -rhs ; lower: terms < rhs
      LinRow n;
      n.rel = Rel::Lt;
      if (upper) {
        for (auto& [v, k] : q.terms) n.terms.emplace_back(v, -k);
        n.rhs = -q.rhs;
      } else {
        n.terms = q.terms;
        n.rhs = q.rhs;
      }
      return make_row(std::move(n.terms), std::move(n.rhs), n.rel);
    };
    switch (q.rel) {
      case Rel::Eq:
        if (!linear_branch_unsat(c, negated(false)) || !linear_branch_unsat(c, negated(true)))
          return false;
        break;
      case Rel::Le: {
        // negation: terms > rhs
        LinRow n = negated(true);
        if (!linear_branch_unsat(c, std::move(n))) return false;
        break;
      }
      case Rel::Lt: {
        // negation: terms >= rhs  i.e.  -terms <= -rhs
        LinRow n;
        n.rel = Rel::Le;
        for (auto& [v, k] : q.terms) n.terms.emplace_back(v, -k);
        n.rhs = -q.rhs;
        if (!linear_branch_unsat(c, make_row(std::move(n.terms), std::move(n.rhs), n.rel)))
          return false;
        break;
      }
    }
  }

  // Freshen d's anons so they cannot capture c's.
  std::map<std::string, std::string> ren;
  auto freshen = [&](const TermPtr& t, const std::set<std::string>* pat) {
    std::vector<VarRef> refs;
    collect_var_refs(t, refs);
    for (auto& r : refs) {
      if (!r.anonymous) continue;
      if (pat && pat->count(r.name)) continue;
      if (!ren.count(r.name)) ren[r.name] = fresh_anon_name();
    }
  };
  for (auto& e : d.equations()) {
    freshen(e.lhs, nullptr);
    freshen(e.rhs, nullptr);
  }
  for (auto& n : d.disequations()) {
    freshen(n.lhs, &n.pattern_vars);
    freshen(n.rhs, &n.pattern_vars);
  }

  PinFn pin = [&](const std::string& name) { return c.pinned_value(name); };

  // Witness bindings for d's existential anons are threaded across all goal
  // atoms, so an anon shared between atoms must be instantiated consistently.
  // Anons reached through c's bindings are rigid: they are never in ren.
  std::map<std::string, TermPtr> witness;
  std::set<std::string> goal_flex;
  for (auto& [from, to] : ren) goal_flex.insert(to);

  // expand a term through the accumulated witness bindings
  std::function<TermPtr(TermPtr)> expand = [&](TermPtr t) -> TermPtr {
    if (t->kind() == Term::Kind::Var) {
      auto it = witness.find(t->var_ref().name);
      return it == witness.end() ? t : expand(it->second);
    }
    if (t->kind() == Term::Kind::Cell)
      return Term::cell(expand(t->head()), expand(t->tail()));
    return t;
  };

  for (auto& e : d.equations()) {
    TermPtr la = rename_vars_in_term(e.lhs, ren);
    TermPtr ra = rename_vars_in_term(e.rhs, ren);
    TermPtr l = c.resolve(expand(la));
    TermPtr r = c.resolve(expand(ra));
    if (terms_identical(l, r)) continue;
    if (numericish(c, l) && numericish(c, r) && l->kind() != Term::Kind::Cell &&
        r->kind() != Term::Kind::Cell) {
      auto [terms, constant] = diff_terms(l, r);
      // need c |= l - r = 0, i.e. both strict branches unsat
      LinRow lt = make_row(terms, -constant, Rel::Lt);
      std::vector<std::pair<std::string, Rat>> negt;
      for (auto& [v, k] : terms) negt.emplace_back(v, -k);
      LinRow gt = make_row(std::move(negt), constant, Rel::Lt);
      if (linear_branch_unsat(c, resolve_row(c, lt)) &&
          linear_branch_unsat(c, resolve_row(c, gt)))
        continue;
      return false;
    }
    Matcher m{goal_flex, pin, witness};
    if (!m.match(l, r)) return false;
    witness = std::move(m.bind);
  }

  // Disequation goals. A goal atom holds if some stored disequation
  // instantiates to it, or else if conjoining the corresponding equation is
  // absurd.
  for (auto& n : d.disequations()) {
    TermPtr gl = rename_vars_in_term(n.lhs, ren);
    TermPtr gr = rename_vars_in_term(n.rhs, ren);

    bool matched = false;
    for (auto& sd : c.disequations()) {
      // the stored atom's own placeholders are flexible for this attempt;
      // freshened so attempts cannot interfere
      std::map<std::string, std::string> sren;
      std::set<std::string> spat;
      for (auto& p : sd.pattern_vars) {
        sren[p] = fresh_anon_name();
        spat.insert(sren[p]);
      }
      TermPtr sl = rename_vars_in_term(sd.lhs, sren);
      TermPtr sr = rename_vars_in_term(sd.rhs, sren);
      std::set<std::string> flex = goal_flex;
      flex.insert(spat.begin(), spat.end());
      for (int orient = 0; orient < 2 && !matched; ++orient) {
        Matcher m{flex, pin, witness};
        bool ok = orient == 0 ? (m.match(gl, sl) && m.match(gr, sr))
                              : (m.match(gl, sr) && m.match(gr, sl));
        if (!ok) continue;
        // a witness for a goal anon may not mention the stored atom's
        // universally quantified placeholders
        auto spat_free = [&](const std::string& name) {
          std::map<std::string, TermPtr> saved = std::move(witness);
          witness = m.bind;
          TermPtr full = expand(Term::var(VarRef{name, VarKind::Discrete, true}));
          witness = std::move(saved);
          std::vector<VarRef> refs;
          collect_var_refs(full, refs);
          for (auto& v : refs)
            if (spat.count(v.name)) return false;
          return true;
        };
        ok = true;
        for (auto& [k, v] : m.bind)
          if (goal_flex.count(k) && !spat_free(k)) ok = false;
        if (ok) {
          witness = std::move(m.bind);
          matched = true;
        }
      }
      if (matched) break;
    }
    if (matched) continue;

    // fallback: c together with (some instance of) l = r is absurd. The
    // goal's own placeholders become fresh generic constants. Witness
    // bindings may mention c's own anons, whose identity matters here, so
    // the equation joins c's raw parts directly instead of going through
    // conjoin, which would rename them apart.
    std::map<std::string, std::string> ren2;
    for (auto& p : n.pattern_vars) ren2[p] = fresh_anon_name();
    TermPtr l = expand(rename_vars_in_term(gl, ren2));
    TermPtr r = expand(rename_vars_in_term(gr, ren2));
    Normalizer::Raw raw = Normalizer::parts_of(c);
    raw.eqs.push_back(TermEq{std::move(l), std::move(r)});
    if (Normalizer::normalize(std::move(raw))) return false;
  }

  return true;
}

Constraint hide(const std::string& var, const Constraint& c) {
  if (c.is_false()) return c;
  if (!c.all_vars().count(var)) return c;

  std::string anon = fresh_anon_name();
  Normalizer::Raw raw = Normalizer::parts_of(c);
  Normalizer::rename_raw(raw, {{var, anon}});
  auto n1 = Normalizer::normalize(std::move(raw), /*reindex=*/false);
  if (!n1) return Constraint::falsity();  // unreachable for consistent input

  Normalizer::Raw parts = Normalizer::parts_of(*n1);
  bool in_linear = false;
  for (auto& row : parts.rows)
    for (auto& [v, k] : row.terms)
      if (v == anon) in_linear = true;
  if (in_linear) parts.rows = fm_eliminate(std::move(parts.rows), anon);
  auto n2 = Normalizer::normalize(std::move(parts));
  return n2 ? *n2 : Constraint::falsity();
}

Constraint rename_constraint_var(const Constraint& c, const std::string& from,
                                 const std::string& to) {
  return rename_constraint_vars(c, {{from, to}});
}

Constraint rename_constraint_vars(const Constraint& c,
                                  const std::map<std::string, std::string>& ren) {
  if (c.is_false()) return c;
  std::set<std::string> vars = c.all_vars();
  bool touches = false;
  for (auto& [from, to] : ren)
    if (from != to && vars.count(from)) touches = true;
  if (!touches) return c;
  Normalizer::Raw raw = Normalizer::parts_of(c);
  Normalizer::rename_raw(raw, ren);
  auto n = Normalizer::normalize(std::move(raw));
  return n ? *n : Constraint::falsity();
}

// --- display -------------------------------------------------------------------

namespace {

std::string row_display(const LinRow& row) {
  bool all_neg = !row.terms.empty();
  for (auto& [v, c] : row.terms)
    if (c > 0) all_neg = false;
  LinRow r = row;
  if (all_neg && row.rel != Rel::Eq) {
    for (auto& [v, c] : r.terms) c = -c;
    r.rhs = -r.rhs;
  }
  std::string out;
  bool first = true;
  for (auto& [v, c] : r.terms) {
    Rat k = c;
    if (first) {
      if (k == 1)
        out += v;
      else if (k == -1)
        out += "-" + v;
      else
        out += rat_to_string(k) + "*" + v;
      first = false;
    } else {
      bool nonneg = k >= 0;
      Rat a = nonneg ? k : Rat(-k);
      out += nonneg ? " + " : " - ";
      out += (a == 1) ? v : rat_to_string(a) + "*" + v;
    }
  }
  switch (r.rel) {
    case Rel::Eq:
      out += " = ";
      break;
    case Rel::Le:
      out += all_neg ? " >= " : " <= ";
      break;
    case Rel::Lt:
      out += all_neg ? " > " : " < ";
      break;
  }
  out += rat_to_string(r.rhs);
  return out;
}

}  // namespace

std::vector<std::string> display_atoms(const Constraint& c) {
  if (c.is_false()) return {"false"};

  struct Line {
    std::function<std::string(const VarNameMap&)> render;
    std::vector<std::string> anons;  // occurrence order
  };
  std::vector<Line> lines;

  auto term_line = [&](std::string prefix, TermPtr t, std::string mid = "",
                       TermPtr t2 = nullptr) {
    Line ln;
    std::vector<VarRef> refs;
    collect_var_refs(t, refs);
    if (t2) collect_var_refs(t2, refs);
    for (auto& r : refs)
      if (r.anonymous) ln.anons.push_back(r.name);
    ln.render = [prefix, t, mid, t2](const VarNameMap& mapper) {
      std::string s = prefix + term_display(t, mapper);
      if (t2) s += mid + term_display(t2, mapper);
      return s;
    };
    lines.push_back(std::move(ln));
  };

  for (auto& e : c.equations())
    term_line(e.lhs->var_ref().name + "=", c.resolve(e.lhs));
  for (auto& n : c.disequations()) {
    // placeholders are atom-local: alias them per line so equal names in
    // different atoms are not mistaken for shared variables
    std::map<std::string, std::string> local;
    for (auto& p : n.pattern_vars) local[p] = p + "@" + std::to_string(lines.size());
    term_line("", rename_vars_in_term(c.resolve(n.lhs), local), "!=",
              rename_vars_in_term(c.resolve(n.rhs), local));
  }
  for (auto& row : c.linear()) {
    Line ln;
    std::string s = row_display(row);
    ln.render = [s](const VarNameMap&) { return s; };
    lines.push_back(std::move(ln));
  }
  for (auto& s : c.signals()) {
    Line ln;
    std::string str = s;
    ln.render = [str](const VarNameMap&) { return str; };
    lines.push_back(std::move(ln));
  }

  VarNameMap masked = [](const VarRef& v) { return v.anonymous ? std::string("_") : v.name; };
  std::vector<size_t> order(lines.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::string> mask_str(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) mask_str[i] = lines[i].render(masked);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (mask_str[a] != mask_str[b]) return mask_str[a] < mask_str[b];
    return lines[a].anons < lines[b].anons;
  });

  // Placeholder display names. Cross-atom existentials number "_1", "_2", ...
  // in output order; an atom-local placeholder repeated within its atom gets
  // a letter ("_a", ...) scoped to that atom; singletons stay plain "_".
  // Atom-local names carry an "@" suffix from the aliasing above.
  std::map<std::string, int> count;
  for (auto& ln : lines)
    for (auto& a : ln.anons) count[a]++;
  std::map<std::string, std::string> display_name;
  int next = 0;
  for (size_t idx : order) {
    int next_local = 0;
    for (auto& a : lines[idx].anons) {
      if (display_name.count(a)) continue;
      bool local = a.find('@') != std::string::npos;
      if (count[a] <= 1)
        display_name[a] = "_";
      else if (local)
        display_name[a] = "_" + std::string(1, char('a' + next_local++));
      else
        display_name[a] = "_" + std::to_string(++next);
    }
  }

  VarNameMap final_map = [&](const VarRef& v) {
    if (!v.anonymous) return v.name;
    auto it = display_name.find(v.name);
    return it == display_name.end() ? std::string("_") : it->second;
  };
  std::vector<std::string> out;
  for (size_t idx : order) out.push_back(lines[idx].render(final_map));
  std::sort(out.begin(), out.end());
  return out;
}

std::string display_constraint(const Constraint& c) {
  if (c.is_false()) return "false";
  auto atoms = display_atoms(c);
  if (atoms.empty()) return "true";
  std::string out;
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += " /\\ ";
    out += atoms[i];
  }
  return out;
}

}  // namespace hytccp
