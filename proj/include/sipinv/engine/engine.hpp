#pragma once

#include <sipinv/interp/interp.hpp>
#include <sipinv/lang/ast.hpp>
#include <sipinv/solver/solver.hpp>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sipinv::engine {

enum class Characterization { TypeTautology, Displaced, DisplacedPot, NonInv, Inductive, Potential, Unknown };

std::string_view to_string(Characterization c);

struct Invariant {
  /// Text as the player typed it.
  std::string text;
  lang::ExprPtr expr;
  /// Canonical printed form; two proposals with the same key are duplicates.
  std::string key;
};

Invariant make_invariant(std::string text, lang::ExprPtr expr);

/// What the engine knows about one level: proved inductive invariants and
/// potential invariants whose initiation is proved. Both lists keep
/// insertion order.
struct InvariantState {
  std::vector<Invariant> inductive;
  std::vector<Invariant> potential;

  bool contains(const std::string& key) const;
  const Invariant* find_potential(const std::string& key) const;
  std::vector<lang::ExprPtr> inductive_exprs() const;
  std::vector<lang::ExprPtr> all_exprs() const;
};

struct Feedback {
  Characterization kind = Characterization::Unknown;
  /// Satisfies the known invariants and the negated loop test, yet the
  /// guarantee fails after the loop.
  std::optional<interp::State> rule_out;
  /// The rule-out state also satisfies the potential invariants.
  bool rule_out_covers_potential = false;
  /// Concrete run to the first loop-head state falsifying a NonInv proposal.
  std::optional<interp::Trace> trace;
  /// Loop-head state before and after one iteration, for why-not queries.
  std::optional<std::pair<interp::State, interp::State>> state_pair;
  std::vector<interp::CAssignChoice> pair_choices;
  bool solved = false;
  std::vector<Invariant> removed;
  std::vector<Invariant> promoted;
  std::string diagnostic;
};

struct ProposalResult {
  Characterization kind = Characterization::Unknown;
  Feedback feedback;
  InvariantState state;
};

/// The proposal is already an inductive or potential invariant.
class DuplicateInvariant : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PromoteResult {
  InvariantState state;
  std::vector<Invariant> promoted;
  std::vector<Invariant> removed;
};

struct SolvedResult {
  bool solved = false;
  /// Exit-check counterexample, recorded for feedback.
  std::optional<interp::State> counterexample;
  std::string diagnostic;
};

enum class WhyNotError { NotPotential, Promotable, Unknown };

struct WhyNotResult {
  std::optional<std::pair<interp::State, interp::State>> pair;
  std::vector<interp::CAssignChoice> choices;
  std::optional<WhyNotError> error;
  std::string diagnostic;
};

/// One engine event: a solver query and its verdict, or a state change.
struct Event {
  std::string type;  // "query", "characterization", "promoted", "removed", "error"
  std::string detail;
  std::string verdict;
};

using EventSink = std::function<void(const Event&)>;

inline constexpr int kDefaultMaxSubset = 2;

struct EngineConfig {
  int unroll_bound = vcgen::kDefaultUnrollBound;
  int max_subset = kDefaultMaxSubset;
  /// Jacobi rounds checked in parallel instead of the serial sweep.
  bool parallel_promote = false;
};

/// Characterizes proposals and evolves an InvariantState for one program.
/// Holds no per-player state; every operation is value-in, value-out.
class Engine {
 public:
  Engine(const lang::Program& p, solver::Checker& checker, EngineConfig cfg = {}, EventSink sink = {});

  const lang::Program& program() const { return p_; }
  const EngineConfig& config() const { return cfg_; }

  /// Throws DuplicateInvariant before any query when `e` is already known.
  ProposalResult propose_loop_inv(const InvariantState& s, const Invariant& e);

  PromoteResult promote(const InvariantState& s);

  /// Greatest subset X of `potential` with every x in X passing consecution
  /// under `inductive` and X. Serial sweep removing failures as they are
  /// found.
  std::vector<std::size_t> promotable_serial(const std::vector<lang::ExprPtr>& inductive,
                                             const std::vector<lang::ExprPtr>& potential);
  /// Same fixpoint by rounds whose checks run in parallel.
  std::vector<std::size_t> promotable_parallel(const std::vector<lang::ExprPtr>& inductive,
                                               const std::vector<lang::ExprPtr>& potential);

  /// Drops, oldest first, every inductive invariant implied by the others,
  /// until a pass removes nothing.
  PromoteResult rem_displaced(const InvariantState& s);

  bool displaced_pot_check(const InvariantState& s, const lang::ExprPtr& e, int max_subset);

  SolvedResult check_solved(const InvariantState& s);

  Feedback gen_feedback(const InvariantState& s, const SolvedResult& solved);

  WhyNotResult why_not_inductive(const InvariantState& s, const std::string& key);

  /// Trace for a counterexample of an initiation or unrolled goal, cut at the
  /// first loop-head row that falsifies `e`.
  std::optional<interp::Trace> trace_from_counterexample(const vcgen::Goal& g, const solver::Counterexample& cex,
                                                         const lang::ExprPtr& e);

 private:
  solver::Verdict ask(const vcgen::Goal& g, solver::QueryKind kind, const std::string& about);
  bool proved(const vcgen::Goal& g, solver::QueryKind kind, const std::string& about);
  void emit(std::string type, std::string detail, std::string verdict = {});

  const lang::Program& p_;
  solver::Checker& checker_;
  EngineConfig cfg_;
  EventSink sink_;
};

/// Scores: Inductive 3, Potential 2, everything else 0.
int proposal_score(Characterization c);
inline constexpr int kSolveBonus = 10;

// ---------------------------------------------------------------------------
// Audits, shared by tests and the CLI

/// Concrete re-checks of a feedback record: the trace is a real run whose
/// last row falsifies `e`, the rule-out state satisfies `s` and the negated
/// test and fails the guarantee, and the state pair is one real iteration.
/// Returns one message per discrepancy.
std::vector<std::string> audit_feedback(const lang::Program& p, const InvariantState& s, const lang::ExprPtr& e,
                                        const Feedback& f);

}  // namespace sipinv::engine
