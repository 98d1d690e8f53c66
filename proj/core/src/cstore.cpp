#include "hytccp/cstore.hpp"

#include "hytccp/errors.hpp"

namespace hytccp {

ContinuousStore ContinuousStore::falsity() {
  ContinuousStore s;
  s.false_ = true;
  return s;
}

const std::map<std::string, ContEntry>& ContinuousStore::entries() const {
  return entries_;
}

bool ContinuousStore::has(const std::string& var) const {
  return !false_ && entries_.count(var) > 0;
}

const ContEntry& ContinuousStore::get(const std::string& var) const {
  if (false_) throw NoCurrentValueError(var);
  auto it = entries_.find(var);
  if (it == entries_.end()) throw UnknownVariableError(var);
  return it->second;
}

void ContinuousStore::set_value(const std::string& var, Rat value) {
  if (false_) throw NoCurrentValueError(var);
  auto it = entries_.find(var);
  if (it == entries_.end()) throw UnknownVariableError(var);
  it->second.value = std::move(value);
}

void ContinuousStore::set_flow(const std::string& var, Rat flow) {
  if (false_) throw NoCurrentValueError(var);
  auto it = entries_.find(var);
  if (it == entries_.end()) throw UnknownVariableError(var);
  it->second.flow = std::move(flow);
}

void ContinuousStore::put(const std::string& var, ContEntry e) {
  entries_[var] = std::move(e);
}

bool ContinuousStore::operator==(const ContinuousStore& o) const {
  return false_ == o.false_ && entries_ == o.entries_;
}

ContinuousStore merge(const ContinuousStore& a, const ContinuousStore& b) {
  if (a.is_false() || b.is_false()) return ContinuousStore::falsity();
  ContinuousStore out = a;
  for (auto& [var, e] : b.entries()) {
    auto it = out.entries().find(var);
    if (it != out.entries().end() && !(it->second == e)) return ContinuousStore::falsity();
    out.put(var, e);
  }
  return out;
}

ContinuousStore hide_cont(const std::string& var, const ContinuousStore& s) {
  if (s.is_false()) return s;
  ContinuousStore out;
  for (auto& [v, e] : s.entries())
    if (v != var) out.put(v, e);
  return out;
}

ContinuousStore update(const ContinuousStore& c, const ContinuousStore& d) {
  if (c.is_false() || d.is_false()) return ContinuousStore::falsity();
  ContinuousStore out = c;
  for (auto& [var, e] : d.entries()) out.put(var, e);
  return out;
}

ContinuousStore project(const ContinuousStore& s, const Rat& tau) {
  if (s.is_false()) return s;
  ContinuousStore out;
  for (auto& [var, e] : s.entries())
    out.put(var, ContEntry{e.value + e.flow * tau, e.flow});
  return out;
}

std::string display_cstore(const ContinuousStore& s) {
  if (s.is_false()) return "false";
  if (s.entries().empty()) return "{}";
  std::string out = "{";
  bool first = true;
  for (auto& [var, e] : s.entries()) {
    if (!first) out += ", ";
    first = false;
    out += var + "↦(" + rat_to_string(e.value) + "," + rat_to_string(e.flow) + ")";
  }
  return out + "}";
}

}  // namespace hytccp
