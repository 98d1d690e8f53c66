#include "hytccp/term.hpp"

namespace hytccp {

TermPtr Term::num(Rat v) {
  auto t = std::make_shared<Term>();
  t->kind_ = Kind::Num;
  t->num_ = std::move(v);
  return t;
}

TermPtr Term::var(VarRef v) {
  auto t = std::make_shared<Term>();
  t->kind_ = Kind::Var;
  t->var_ = std::move(v);
  return t;
}

TermPtr Term::sym(std::string name) {
  auto t = std::make_shared<Term>();
  t->kind_ = Kind::Sym;
  t->sym_ = std::move(name);
  return t;
}

TermPtr Term::cell(TermPtr head, TermPtr tail) {
  auto t = std::make_shared<Term>();
  t->kind_ = Kind::Cell;
  t->head_ = std::move(head);
  t->tail_ = std::move(tail);
  return t;
}

TermPtr Term::nil() {
  static const TermPtr n = std::make_shared<Term>();
  return n;
}

void collect_vars(const TermPtr& t, std::set<std::string>& out) {
  switch (t->kind()) {
    case Term::Kind::Var:
      out.insert(t->var_ref().name);
      break;
    case Term::Kind::Cell:
      collect_vars(t->head(), out);
      collect_vars(t->tail(), out);
      break;
    default:
      break;
  }
}

bool contains_var(const TermPtr& t, const std::string& name) {
  switch (t->kind()) {
    case Term::Kind::Var:
      return t->var_ref().name == name;
    case Term::Kind::Cell:
      return contains_var(t->head(), name) || contains_var(t->tail(), name);
    default:
      return false;
  }
}

int compare_terms(const TermPtr& a, const TermPtr& b) {
  auto ka = static_cast<int>(a->kind()), kb = static_cast<int>(b->kind());
  if (ka != kb) return ka < kb ? -1 : 1;
  switch (a->kind()) {
    case Term::Kind::Num: {
      if (a->num_value() == b->num_value()) return 0;
      return a->num_value() < b->num_value() ? -1 : 1;
    }
    case Term::Kind::Var: {
      const auto& na = a->var_ref().name;
      const auto& nb = b->var_ref().name;
      return na == nb ? 0 : (na < nb ? -1 : 1);
    }
    case Term::Kind::Sym: {
      return a->sym_name() == b->sym_name() ? 0 : (a->sym_name() < b->sym_name() ? -1 : 1);
    }
    case Term::Kind::Cell: {
      int h = compare_terms(a->head(), b->head());
      if (h != 0) return h;
      return compare_terms(a->tail(), b->tail());
    }
    case Term::Kind::Nil:
      return 0;
  }
  return 0;
}

bool terms_identical(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  return compare_terms(a, b) == 0;
}

TermPtr substitute_term(const TermPtr& t,
                        const std::vector<std::pair<std::string, TermPtr>>& subst) {
  switch (t->kind()) {
    case Term::Kind::Var:
      for (const auto& [name, repl] : subst)
        if (name == t->var_ref().name) return repl;
      return t;
    case Term::Kind::Cell: {
      TermPtr h = substitute_term(t->head(), subst);
      TermPtr tl = substitute_term(t->tail(), subst);
      if (h.get() == t->head().get() && tl.get() == t->tail().get()) return t;
      return Term::cell(h, tl);
    }
    default:
      return t;
  }
}

std::string term_to_string(const TermPtr& t) {
  switch (t->kind()) {
    case Term::Kind::Num:
      return rat_to_string(t->num_value());
    case Term::Kind::Var:
      return t->var_ref().name;
    case Term::Kind::Sym:
      return t->sym_name();
    case Term::Kind::Nil:
      return "[]";
    case Term::Kind::Cell: {
      std::string out = "[" + term_to_string(t->head());
      TermPtr cur = t->tail();
      while (cur->kind() == Term::Kind::Cell) {
        out += "," + term_to_string(cur->head());
        cur = cur->tail();
      }
      if (cur->kind() == Term::Kind::Nil) return out + "]";
      return out + "|" + term_to_string(cur) + "]";
    }
  }
  return "?";
}

}  // namespace hytccp
