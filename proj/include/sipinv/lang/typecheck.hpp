#pragma once

#include <sipinv/lang/ast.hpp>
#include <sipinv/lang/diagnostics.hpp>

#include <variant>
#include <vector>

namespace sipinv::lang {

/// Infers the type of `e` under `env`. Throws LangError (Type or
/// UnknownVariable).
ExprType infer_type(const Expr& e, const TypeEnv& env);

/// Throws unless `e` is a well-typed boolean expression.
void require_boolean(const Expr& e, const TypeEnv& env);

/// Whether a value of expression type `value` may be stored in a variable of
/// declared type `target`. Int into Natural is allowed statically and checked
/// at run time.
bool assignable(Type target, ExprType value);

using TypecheckResult = std::variant<TypeEnv, std::vector<Diagnostic>>;

/// Checks the whole program: well-typed expressions and assignments, boolean
/// tests and guards, declare-before-use, and that every local is definitely
/// assigned before the loop is reached.
TypecheckResult typecheck(const Program& p);

}  // namespace sipinv::lang
