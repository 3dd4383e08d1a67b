#pragma once

#include <sipinv/lang/ast.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sipinv::vcgen {

/// A loop-free statement sequence over the program's variables whose last
/// element is an assert. Every variable in `env` is a free, typed input.
struct Goal {
  lang::TypeEnv env;
  std::vector<lang::StmtPtr> stmts;
};

/// Throws std::invalid_argument when the goal breaks its shape contract.
void validate(const Goal& g);

std::string to_string(const Goal& g);

inline constexpr int kDefaultUnrollBound = 5;

/// Prefix for the gating booleans of unrolled iterations.
inline constexpr std::string_view kGatePrefix = "__gate";

/// `assume(hyps); assert(e)`, or just `assert(e)` when `hyps` is empty.
Goal build_assertion(const lang::Program& p, std::span<const lang::ExprPtr> hyps, const lang::ExprPtr& e);

/// Statements before the loop, without declarations and behind `assume(pre)`,
/// then `assert(e)`.
Goal build_upto_loop(const lang::Program& p, const lang::ExprPtr& e);

/// The loop-entry prefix followed by `k` copies of
/// `cassign([g_i], true); if (g_i & test) { body }`, then `assert(e)`. Any
/// counterexample is a loop-head state reachable within `k` iterations.
Goal build_loop_unrolled(const lang::Program& p, const lang::ExprPtr& e, int k);

/// `assume(hyps & test); body; assert(x)`.
Goal build_consecution(const lang::Program& p, std::span<const lang::ExprPtr> hyps, const lang::ExprPtr& x);

/// `assume(assumed & !test); epilogue; assert(post)`.
Goal build_exit_check(const lang::Program& p, std::span<const lang::ExprPtr> assumed);

/// CAssign statements of the goal in pre-order (then-branch before
/// else-branch). Indexes into Formula::cassign_names.
std::vector<const lang::Stmt*> cassign_occurrences(const Goal& g);

enum class Sort { Bool, Int, Real };

std::string_view smt_sort(Sort s);

/// Quantifier-free encoding of a goal. Satisfiable exactly when some
/// type-conforming start state reaches a failing assert, claim or partial
/// operation.
struct Formula {
  struct Obligation {
    std::size_t assumptions_before = 0;
    std::string path;
    std::string condition;
  };

  lang::TypeEnv env;
  std::vector<std::pair<std::string, Sort>> declarations;
  /// Non-negativity of Natural-typed constants.
  std::vector<std::string> type_constraints;
  /// Equations defining assigned versions.
  std::vector<std::string> definitions;
  /// Path-guarded assumptions, in execution order.
  std::vector<std::string> assumptions;
  std::vector<Obligation> obligations;
  /// Program variable -> constant naming its value at the start.
  std::map<std::string, std::string> inputs;
  /// Per cassign occurrence, the constants holding the chosen values.
  std::vector<std::vector<std::string>> cassign_names;

  std::string violation() const;
  /// Full query: declarations, constraints, negated obligation, check-sat
  /// and get-model.
  std::string to_smtlib(std::optional<double> timeout_seconds = std::nullopt) const;
};

/// Forward symbolic execution with per-assignment versions. Throws
/// std::invalid_argument on a goal that contains a loop.
Formula symexec_to_vc(const Goal& g);

/// SMT-LIB literal for an exact rational of the given sort.
std::string smt_literal(const mpq_class& q, Sort sort);

}  // namespace sipinv::vcgen
