#pragma once

#include <stdexcept>
#include <string>

namespace hytccp {

// Continuous-store access to a variable that has no entry.
class UnknownVariableError : public std::runtime_error {
public:
  explicit UnknownVariableError(const std::string& var)
      : std::runtime_error("unknown continuous variable: " + var), variable(var) {}
  std::string variable;
};

// Reading the value/flow of a variable out of an inconsistent continuous store.
class NoCurrentValueError : public std::runtime_error {
public:
  explicit NoCurrentValueError(const std::string& var)
      : std::runtime_error("no current value for: " + var), variable(var) {}
  std::string variable;
};

class InconsistentInitialStoreError : public std::runtime_error {
public:
  InconsistentInitialStoreError() : std::runtime_error("initial store is inconsistent") {}
};

// Source-level problem in a .hyt program. Line/column are 1-based.
class ParseError : public std::runtime_error {
public:
  ParseError(std::string msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
        line(line_), col(col_) {}
  int line;
  int col;
};

// A call names a process with no declaration.
class UnboundProcessError : public ParseError {
public:
  UnboundProcessError(const std::string& name_, int line, int col)
      : ParseError("call to undeclared process " + name_, line, col), name(name_) {}
  std::string name;
};

// A call's argument count differs from the declaration's parameter count.
class ArityMismatchError : public ParseError {
public:
  ArityMismatchError(const std::string& name_, size_t want_, size_t got_, int line, int col)
      : ParseError("process " + name_ + " takes " + std::to_string(want_) +
                       " argument(s), got " + std::to_string(got_),
                   line, col),
        name(name_), want(want_), got(got_) {}
  std::string name;
  size_t want;
  size_t got;
};

// One name used both as a continuous variable and in a term position.
class KindClashError : public ParseError {
public:
  KindClashError(const std::string& name_, int line, int col)
      : ParseError("variable " + name_ + " is continuous but used as a term", line, col),
        name(name_) {}
  std::string name;
};

// Internal invariant violation during stepping. Seeing one is a bug.
class EngineError : public std::logic_error {
public:
  explicit EngineError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace hytccp
