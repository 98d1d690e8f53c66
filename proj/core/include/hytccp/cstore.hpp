#pragma once

#include "hytccp/rational.hpp"

#include <map>
#include <string>

namespace hytccp {

// One continuous variable: current value plus constant flow (slope).
struct ContEntry {
  Rat value;
  Rat flow;

  bool operator==(const ContEntry& o) const { return value == o.value && flow == o.flow; }
};

// Non-monotone store over continuous variables, plus a distinguished
// inconsistent element reached when parallel components disagree.
class ContinuousStore {
public:
  ContinuousStore() = default;

  static ContinuousStore falsity();
  bool is_false() const { return false_; }
  bool empty() const { return !false_ && entries_.empty(); }

  const std::map<std::string, ContEntry>& entries() const;

  bool has(const std::string& var) const;
  // Both throw UnknownVariableError when the variable has no entry and
  // NoCurrentValueError on the inconsistent store.
  const ContEntry& get(const std::string& var) const;
  void set_value(const std::string& var, Rat value);
  void set_flow(const std::string& var, Rat flow);
  // Introduces or replaces an entry wholesale.
  void put(const std::string& var, ContEntry e);

  bool operator==(const ContinuousStore& o) const;

private:
  bool false_ = false;
  std::map<std::string, ContEntry> entries_;
};

// Parallel composition: disagreement on a shared variable yields the
// inconsistent store.
ContinuousStore merge(const ContinuousStore& a, const ContinuousStore& b);

// Existential quantification: forgets the entry.
ContinuousStore hide_cont(const std::string& var, const ContinuousStore& s);

// Asymmetric update, d wins on shared variables; never inconsistent unless
// an operand already is.
ContinuousStore update(const ContinuousStore& c, const ContinuousStore& d);

// Time passage: value moves to value + flow * tau, flows unchanged.
ContinuousStore project(const ContinuousStore& s, const Rat& tau);

std::string display_cstore(const ContinuousStore& s);

}  // namespace hytccp
