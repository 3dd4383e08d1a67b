#pragma once

#include <sipinv/interp/value.hpp>
#include <sipinv/lang/ast.hpp>

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sipinv::interp {

enum class RuntimeErrorKind { DivisionByZero, NonPositiveModulus, NaturalUnderflow, TypeMismatch, UnboundVariable };

class RuntimeError : public std::runtime_error {
 public:
  RuntimeError(RuntimeErrorKind kind, lang::SourcePos pos, const std::string& msg)
      : std::runtime_error(msg), kind_(kind), pos_(pos) {}
  RuntimeErrorKind kind() const noexcept { return kind_; }
  lang::SourcePos pos() const noexcept { return pos_; }

 private:
  RuntimeErrorKind kind_;
  lang::SourcePos pos_;
};

/// Exact evaluation; throws RuntimeError on partial operations.
Value eval_expr(const lang::Expr& e, const State& st);

/// Evaluates a boolean expression.
bool holds(const lang::Expr& e, const State& st);

/// Like `holds`, but an evaluation error counts as false.
bool holds_or_false(const lang::Expr& e, const State& st);

// ---------------------------------------------------------------------------
// cassign

/// Values picked for one executed cassign, in target order.
struct CAssignChoice {
  const lang::Stmt* stmt = nullptr;  // valid while the executed statements live
  lang::SourcePos pos;
  std::vector<Value> values;
};

/// Supplies predetermined values for a cassign statement, or nullopt to
/// search.
using ChoiceProvider = std::function<std::optional<std::vector<Value>>(const lang::Stmt&)>;

enum class SearchFailure { ProvedUnsatisfiable, Exhausted };

/// Complete fallback used after random sampling fails; normally backed by the
/// prover.
using ModelFinder = std::function<std::variant<State, SearchFailure>(
    const std::vector<std::string>& targets, const lang::Expr& constraint, const State& st, const lang::TypeEnv& env)>;

class CAssignUnsatisfiable : public std::runtime_error {
 public:
  CAssignUnsatisfiable(bool proved, const std::string& msg) : std::runtime_error(msg), proved_(proved) {}
  /// True when unsatisfiability was proved; false when search gave up.
  bool proved() const noexcept { return proved_; }

 private:
  bool proved_;
};

inline constexpr int kDefaultIterationCap = 10000;
inline constexpr int kDefaultCAssignAttempts = 1000;

struct ExecOptions {
  int iteration_cap = kDefaultIterationCap;
  std::uint64_t seed = 0;
  int cassign_attempts = kDefaultCAssignAttempts;
  ChoiceProvider choices;
  ModelFinder finder;
};

/// Updates `st` so `constraint` holds: random sampling first, then `finder`.
/// Throws CAssignUnsatisfiable.
State solve_cassign(const std::vector<std::string>& targets, const lang::Expr& constraint, const State& st,
                    const lang::TypeEnv& env, Rng& rng, const ModelFinder& finder = {},
                    int attempts = kDefaultCAssignAttempts);

// ---------------------------------------------------------------------------
// Traces

enum class TraceOutcome { Completed, Truncated, Infeasible, AssertionFailed, CAssignUnsatisfiable, RuntimeError };

std::string_view to_string(TraceOutcome o);

struct Trace {
  State inputs;
  /// One row per arrival at the loop head, in order.
  std::vector<State> rows;
  /// State at the end of the function, when execution got there.
  std::optional<State> post;
  std::vector<std::string> output;
  TraceOutcome outcome = TraceOutcome::Completed;
  std::string message;
  std::optional<State> failing_state;
  std::optional<bool> guarantee_holds;
  std::vector<CAssignChoice> choices;
};

/// Inputs do not assign exactly the parameters with conforming values.
class InputError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class PreconditionViolated : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs the program on `inputs`, sampling the state at every loop-head
/// arrival and once at the end. Throws InputError or PreconditionViolated;
/// every other failure is reported through Trace::outcome.
Trace exec_trace(const lang::Program& p, const State& inputs, const ExecOptions& opts = {});

/// Parameter-only state drawn from the sampling distribution and satisfying
/// the precondition, or nullopt after `attempts` rejections.
std::optional<State> sample_inputs(const lang::Program& p, Rng& rng, int attempts = 1000);

// ---------------------------------------------------------------------------
// Straight-line runs (goals)

enum class RunOutcome { Held, Violated, Infeasible };

struct RunResult {
  RunOutcome outcome = RunOutcome::Held;
  State final_state;
  /// Snapshots taken at LoopHeadMark statements.
  std::vector<State> loop_heads;
  std::vector<CAssignChoice> choices;
  std::string message;
};

/// Executes loop-free statements from `start`. A failing assert/claim or a
/// partial operation is a violation; a false assume or unsatisfiable cassign
/// makes the run infeasible. Print is skipped.
RunResult run_statements(std::span<const lang::StmtPtr> stmts, const lang::TypeEnv& env, State start,
                         const ExecOptions& opts = {});

/// One execution of the loop body from `before`.
RunResult exec_body(const lang::Program& p, const State& before, const ExecOptions& opts = {});

}  // namespace sipinv::interp
