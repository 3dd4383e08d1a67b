#pragma once

#include <sipinv/lang/ast.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace sipinv::lang {

struct Diagnostic {
  SourcePos pos;
  std::string message;
};

std::string format(const Diagnostic& d);

enum class ErrorKind {
  Syntax,
  Structure,        // loop count, function count, misplaced declarations
  Type,             // ill-typed operands or assignments
  UnknownVariable,  // reference to an undeclared name
  NotBoolean,       // top-level expression is not boolean
};

/// Raised by the parser and the checker. Carries every diagnostic found.
class LangError : public std::runtime_error {
 public:
  LangError(ErrorKind kind, std::vector<Diagnostic> diagnostics);
  LangError(ErrorKind kind, SourcePos pos, std::string message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  ErrorKind kind_;
  std::vector<Diagnostic> diagnostics_;
};

}  // namespace sipinv::lang
