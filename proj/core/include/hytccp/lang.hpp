#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hytccp/constraint.hpp"
#include "hytccp/hstore.hpp"

namespace hytccp {

struct Agent;
using AgentPtr = std::shared_ptr<const Agent>;

struct AskBranch {
  Constraint guard;
  AgentPtr body;
};

// One node of the agent tree. Nodes are immutable; stepping allocates new
// ones. Only Hide carries evolving state (its local store), threaded by the
// engine through hide_with.
struct Agent {
  enum class Kind { Stop, Tell, Parallel, Now, Hide, Call, Change, Choice };

  Kind kind = Kind::Stop;
  Constraint constraint;               // Tell: told constraint; Now: condition
  AgentPtr left, right;                // Parallel: components; Now: then/else
  AgentPtr body;                       // Hide
  std::string name;                    // Hide/Change: variable; Call: process
  std::vector<std::string> args;       // Call
  std::optional<Rat> value, flow;      // Change; nullopt keeps the current one
  std::vector<AskBranch> asks;         // Choice: guarded branches
  std::vector<Constraint> invariants;  // Choice: continuous branches
  HybridStore local;                   // Hide

  static AgentPtr stop();
  static AgentPtr tell(Constraint c);
  static AgentPtr parallel(AgentPtr l, AgentPtr r);
  static AgentPtr now(Constraint cond, AgentPtr then_branch, AgentPtr else_branch);
  static AgentPtr hide(std::string var, AgentPtr body);  // local store empty
  static AgentPtr hide_with(std::string var, AgentPtr body, HybridStore local);
  static AgentPtr call(std::string name, std::vector<std::string> args);
  static AgentPtr change(std::string var, std::optional<Rat> value, std::optional<Rat> flow);
  static AgentPtr choice(std::vector<AskBranch> asks, std::vector<Constraint> invariants);
};

// Structural equality, including Hide local stores.
bool agents_equal(const AgentPtr& a, const AgentPtr& b);

struct Declaration {
  std::vector<std::string> params;
  AgentPtr body;
};

struct Program {
  std::map<std::string, Declaration> declarations;
  AgentPtr entry;                  // call to init when declared, else null
  std::set<std::string> continuous;  // names from cvar lists and change targets
};

// Parse a full program text. Throws ParseError (or a subclass) on bad input.
Program parse_program(const std::string& source);

// Parse a single constraint / agent, as used for command-line overrides.
// `continuous` marks which variable names are continuous.
Constraint parse_constraint_text(const std::string& source,
                                 const std::set<std::string>& continuous = {});
AgentPtr parse_agent_text(const std::string& source, const Program& context);

// Pretty-printers; parse(pretty(p)) is structurally equal to p.
std::string pretty(const Program& p);
std::string pretty_agent(const AgentPtr& a);
std::string pretty_constraint(const Constraint& c);

}  // namespace hytccp
