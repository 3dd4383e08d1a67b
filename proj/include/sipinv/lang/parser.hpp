#pragma once

#include <sipinv/lang/ast.hpp>
#include <sipinv/lang/diagnostics.hpp>

#include <string_view>

namespace sipinv::lang {

/// Parses one SIP function. Checks structure (single function, single
/// top-level loop, declarations before the loop) and collects the type
/// environment from parameters and declarations; full type checking is
/// `typecheck`. Throws LangError.
Program parse_program(std::string_view source);

/// Parses a player expression, checks it against `env` and requires it to be
/// boolean. `^` with a literal exponent is expanded into multiplication.
ExprPtr parse_expr(std::string_view source, const TypeEnv& env);

/// Parses an expression without type checking.
ExprPtr parse_expr_untyped(std::string_view source);

/// parse_program followed by typecheck; throws on any diagnostic.
Program load_program(std::string_view source);

}  // namespace sipinv::lang
