#pragma once

#include "hytccp/rational.hpp"

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace hytccp {

enum class VarKind { Discrete, Continuous };

// Identity is the name alone; kind and the anonymous flag ride along as
// metadata. Anonymous variables are existential placeholders; their storage
// names start with '~', which the surface syntax cannot produce.
struct VarRef {
  std::string name;
  VarKind kind = VarKind::Discrete;
  bool anonymous = false;

  bool operator==(const VarRef& o) const { return name == o.name; }
  bool operator<(const VarRef& o) const { return name < o.name; }
};

class Term;
using TermPtr = std::shared_ptr<const Term>;

// Immutable tree: rationals, variables, 0-ary symbols, stream cells, nil.
// Streams like [off,on|T] are right-nested cells ending in a variable or nil.
class Term {
public:
  enum class Kind { Num, Var, Sym, Cell, Nil };

  static TermPtr num(Rat v);
  static TermPtr var(VarRef v);
  static TermPtr sym(std::string name);
  static TermPtr cell(TermPtr head, TermPtr tail);
  static TermPtr nil();

  Kind kind() const { return kind_; }
  const Rat& num_value() const { return num_; }
  const VarRef& var_ref() const { return var_; }
  const std::string& sym_name() const { return sym_; }
  const TermPtr& head() const { return head_; }
  const TermPtr& tail() const { return tail_; }

private:
  Kind kind_ = Kind::Nil;
  Rat num_;
  VarRef var_;
  std::string sym_;
  TermPtr head_, tail_;
};

void collect_vars(const TermPtr& t, std::set<std::string>& out);
bool contains_var(const TermPtr& t, const std::string& name);

// Structural: -1/0/1. Orders Num < Var < Sym < Cell < Nil by kind, payloads
// within a kind. Used only to pick canonical atom orderings.
int compare_terms(const TermPtr& a, const TermPtr& b);
bool terms_identical(const TermPtr& a, const TermPtr& b);

// Replaces variables by name. Missing names stay as they are.
TermPtr substitute_term(const TermPtr& t,
                        const std::vector<std::pair<std::string, TermPtr>>& subst);

// Debug/display form: streams as [a,b|T], nil as [].
std::string term_to_string(const TermPtr& t);

}  // namespace hytccp
