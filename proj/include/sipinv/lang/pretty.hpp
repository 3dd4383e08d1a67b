#pragma once

#include <sipinv/lang/ast.hpp>

#include <string>

namespace sipinv::lang {

/// Prints with the minimum parentheses needed to reparse to the same tree.
std::string to_string(const Expr& e);
std::string to_string(const ExprPtr& e);

std::string to_string(const Stmt& s, int indent = 0);

/// Source text for a whole program; `parse_program` of the result yields a
/// structurally identical Program.
std::string to_string(const Program& p);

std::string render(const mpq_class& q);

}  // namespace sipinv::lang
