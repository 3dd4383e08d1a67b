#pragma once

#include <gmpxx.h>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sipinv::lang {

/// Declared type of a SIP variable. Naturals are integers constrained to be
/// non-negative; Rationals are exact.
enum class Type { Boolean, Natural, Integer, Rational };

std::string_view to_string(Type type);
std::optional<Type> parse_type_name(std::string_view name);

/// Type of an expression after Natural/Integer are merged into one integral
/// kind. Only the declared Type distinguishes naturals.
enum class ExprType { Bool, Int, Rat };

std::string_view to_string(ExprType type);

struct SourcePos {
  int line = 0;
  int column = 0;
};

enum class UnaryOp { Negate, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

std::string_view spelling(BinaryOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct BoolLit {
  bool value;
};
struct IntLit {
  mpz_class value;
};
struct RatLit {
  mpq_class value;
};
struct VarRef {
  std::string name;
};
struct Unary {
  UnaryOp op;
  ExprPtr operand;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Expr {
  std::variant<BoolLit, IntLit, RatLit, VarRef, Unary, Binary> node;
  SourcePos pos;
};

ExprPtr make_bool(bool value, SourcePos pos = {});
ExprPtr make_int(mpz_class value, SourcePos pos = {});
ExprPtr make_rat(mpq_class value, SourcePos pos = {});
ExprPtr make_var(std::string name, SourcePos pos = {});
ExprPtr make_unary(UnaryOp op, ExprPtr operand, SourcePos pos = {});
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourcePos pos = {});

/// Left-nested conjunction; `true` for an empty list.
ExprPtr conjoin(const std::vector<ExprPtr>& parts);

/// Structural equality, ignoring source positions.
bool structurally_equal(const Expr& a, const Expr& b);

/// Number of nodes in the expression tree.
std::size_t expr_size(const Expr& e);

/// Names of all variables referenced by `e`, sorted and unique.
std::vector<std::string> free_variables(const Expr& e);

/// Replaces variable references by the mapped expressions.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& replacements);

// ---------------------------------------------------------------------------
// Statements

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct VarDecl {
  std::string name;
  Type type;
};
struct Assign {
  std::string target;
  ExprPtr value;
};
/// Sequential composition.
struct Block {
  std::vector<StmtPtr> stmts;
};
struct If {
  ExprPtr cond;
  StmtPtr then_branch;  // Block
  StmtPtr else_branch;  // Block, possibly empty
};
struct While {
  ExprPtr annotation;  // optional `[e]`, may be null
  ExprPtr test;
  StmtPtr body;  // Block
};
struct Print {
  std::vector<ExprPtr> args;
};
struct Assume {
  ExprPtr cond;
};
/// `assert(e)` or `claim(e)`; both carry the same meaning.
struct Assert {
  ExprPtr cond;
  bool claim = false;
};
struct CAssign {
  std::vector<std::string> targets;
  ExprPtr constraint;
};
/// Internal marker: snapshot the state as a loop-head row. Never produced by
/// the parser; inserted by goal construction.
struct LoopHeadMark {
  int iteration = 0;
};

struct Stmt {
  std::variant<VarDecl, Assign, Block, If, While, Print, Assume, Assert, CAssign, LoopHeadMark> node;
  SourcePos pos;
};

StmtPtr make_stmt(decltype(Stmt::node) node, SourcePos pos = {});
StmtPtr make_block(std::vector<StmtPtr> stmts, SourcePos pos = {});

/// Deep copy of a statement tree. Expressions are shared, statement nodes are
/// fresh, so identity-keyed lookups distinguish the copies.
StmtPtr clone_stmt(const StmtPtr& s);

// ---------------------------------------------------------------------------
// Programs

using TypeEnv = std::map<std::string, Type>;

struct Param {
  std::string name;
  Type type;
};

/// A single SIP function with exactly one top-level while loop.
struct Program {
  std::string name;
  std::vector<Param> params;
  Type return_type = Type::Integer;
  ExprPtr pre;   // may be null
  ExprPtr post;  // the guarantee; `true` when absent
  std::vector<StmtPtr> prelude;
  ExprPtr loop_annotation;  // may be null
  ExprPtr test;
  StmtPtr body;
  std::vector<StmtPtr> epilogue;
  TypeEnv env;
  SourcePos loop_pos;
};

ExprType expr_type_of(Type t);

}  // namespace sipinv::lang
