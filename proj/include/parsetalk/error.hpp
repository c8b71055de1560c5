#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace parsetalk {

// Base for everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed textual input (feature notation, grammar files).
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// A name (class, concept, role, dependency, form) that was never declared.
class DeclarationError : public Error {
 public:
  using Error::Error;
};

// Grammar bundle violates load-time invariants; one diagnostic per violation.
class LoadError : public Error {
 public:
  explicit LoadError(std::vector<std::string> diagnostics)
      : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<std::string>& d) {
    std::string out;
    for (const auto& s : d) out += (out.empty() ? "" : "\n") + s;
    return out;
  }

  std::vector<std::string> diagnostics_;
};

// Message protocol broken at run time (dead target, stray receipt, ...).
class ProtocolFault : public Error {
 public:
  using Error::Error;
};

}  // namespace parsetalk
