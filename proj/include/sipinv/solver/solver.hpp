#pragma once

#include <sipinv/interp/interp.hpp>
#include <sipinv/lang/ast.hpp>
#include <sipinv/vcgen/vcgen.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace sipinv::solver {

struct Proved {};

struct Counterexample {
  /// Start state of the goal, over the program variables.
  interp::State model;
  /// Values chosen by each cassign occurrence (see vcgen::cassign_occurrences).
  std::vector<std::optional<std::vector<interp::Value>>> cassign_values;
  /// Last loop-head snapshot reached by the replay, for unrolled goals.
  std::optional<interp::State> loop_head;
  /// Where the counterexample came from: "smt" or "fuzz".
  std::string origin;
};

enum class UnknownReason { Timeout, IncompleteTheory, Resource };

std::string_view to_string(UnknownReason r);

struct Unknown {
  UnknownReason reason = UnknownReason::IncompleteTheory;
  std::string detail;
};

using Verdict = std::variant<Proved, Counterexample, Unknown>;

std::string_view verdict_name(const Verdict& v);

/// Prover process could not be run or spoke an unexpected protocol.
class TransportError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultFuzzSamples = 2000;

struct SolverConfig {
  /// Command line of an SMT-LIB prover reading a script on stdin.
  std::string command = "z3 -in -smt2";
  double timeout_seconds = 10.0;
  int fuzz_samples = kDefaultFuzzSamples;
  std::uint64_t seed = 0x5151;
  int pool_size = 4;
  bool parallel_fuzz = true;
};

// ---------------------------------------------------------------------------
// Prover process

struct ProcessResult {
  std::string out;
  int exit_status = 0;
  bool killed = false;
};

/// Runs `argv` with `input` on stdin, collecting stdout; the process is killed
/// once `limit` has elapsed. Throws TransportError if it cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds limit);

std::vector<std::string> split_command(const std::string& command);

// ---------------------------------------------------------------------------
// Responses

/// Minimal s-expression tree.
struct SExpr {
  std::string atom;
  std::vector<SExpr> list;
  bool is_list = false;
};

/// Parses every top-level s-expression in `text`. Throws TransportError on
/// unbalanced input.
std::vector<SExpr> parse_sexprs(std::string_view text);

/// Value of a model term: numerals, decimals, `(- t)`, `(/ t t)`, true, false.
std::optional<mpq_class> model_number(const SExpr& term);

struct Response {
  enum class Status { Sat, Unsat, Unknown } status = Status::Unknown;
  /// Constant name -> term, only for sat.
  std::map<std::string, SExpr> model;
};

Response parse_response(std::string_view output);

// ---------------------------------------------------------------------------
// Goal checking

/// Replays a counterexample concretely on the goal.
interp::RunResult replay(const vcgen::Goal& g, const Counterexample& cex);

/// Supplies the counterexample's cassign values to the goal's statements.
interp::ChoiceProvider choices_for(const vcgen::Goal& g, const Counterexample& cex);

/// Stable 64-bit FNV-1a hash of the goal's query text.
std::uint64_t query_key(const vcgen::Goal& g);

/// Random search for a violating start state of the goal: `samples` draws,
/// each from its own seeded stream, and the lowest violating index wins.
/// The parallel and serial versions return the same result.
std::optional<Counterexample> fuzz_counterexample(const vcgen::Goal& g, int samples, std::uint64_t seed);
std::optional<Counterexample> fuzz_counterexample_serial(const vcgen::Goal& g, int samples, std::uint64_t seed);

/// Decides a goal with the SMT prover. A counterexample is accepted only when
/// it replays; otherwise and on unknown, random search gets a chance before
/// giving up with Unknown. Retries once, then throws TransportError.
Verdict gen_chk_vcs(const lang::Program& p, const vcgen::Goal& g, const SolverConfig& cfg);

/// Same, without projecting the model onto the program's variables.
Verdict check_goal(const vcgen::Goal& g, const SolverConfig& cfg);

// ---------------------------------------------------------------------------
// Checkers

enum class QueryKind {
  Tautology,
  Displaced,
  DisplacedPot,
  Initiation,
  Unrolled,
  Consecution,
  Exit,
  Feedback,
  WhyNot,
  CAssign,
  Other
};

std::string_view to_string(QueryKind k);

class Checker {
 public:
  virtual ~Checker() = default;
  virtual Verdict check(const lang::Program& p, const vcgen::Goal& g, QueryKind kind) = 0;
};

struct ProverStats {
  std::uint64_t queries = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t proved = 0;
  std::uint64_t counterexamples = 0;
  std::uint64_t unknown = 0;
};

/// SMT-backed checker with a verdict cache keyed by the query text and a
/// bound on concurrently running prover processes. Unknown verdicts are not
/// cached.
class Prover : public Checker {
 public:
  explicit Prover(SolverConfig cfg = {});

  Verdict check(const lang::Program& p, const vcgen::Goal& g, QueryKind kind) override;

  const SolverConfig& config() const { return cfg_; }
  ProverStats stats() const;

 private:
  SolverConfig cfg_;
  std::counting_semaphore<256> slots_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Verdict> cache_;
  ProverStats stats_;
};

/// Verdict outcome in a form that can be stored and replayed.
struct RecordedVerdict {
  std::uint64_t key = 0;
  std::string verdict;  // "proved", "counterexample", "unknown"
  std::map<std::string, std::string> model;
  /// Rendered cassign values per occurrence; empty for occurrences not run.
  std::vector<std::vector<std::string>> cassign;
  std::string detail;
};

RecordedVerdict record(const vcgen::Goal& g, const Verdict& v);

/// Forwards to another checker and keeps every verdict in order.
class RecordingChecker : public Checker {
 public:
  explicit RecordingChecker(Checker& inner) : inner_(inner) {}
  Verdict check(const lang::Program& p, const vcgen::Goal& g, QueryKind kind) override;
  std::vector<std::pair<QueryKind, RecordedVerdict>> take();

 private:
  Checker& inner_;
  std::mutex mu_;
  std::vector<std::pair<QueryKind, RecordedVerdict>> log_;
};

/// Answers from recorded verdicts without running a prover, matching each
/// query by kind and query text so the order of queries does not matter.
/// Recorded counterexamples are re-checked by replay; a query with no usable
/// record goes to `fallback` when given, else yields Unknown.
class ReplayChecker : public Checker {
 public:
  explicit ReplayChecker(const std::vector<std::pair<QueryKind, RecordedVerdict>>& script,
                         Checker* fallback = nullptr);
  Verdict check(const lang::Program& p, const vcgen::Goal& g, QueryKind kind) override;
  std::size_t remaining() const;
  std::size_t mismatches() const;

 private:
  std::map<std::pair<QueryKind, std::uint64_t>, std::vector<RecordedVerdict>> pending_;
  Checker* fallback_;
  mutable std::mutex mu_;
  std::size_t mismatches_ = 0;
};

/// Complete fallback for cassign: asks the checker for values satisfying the
/// constraint in the current state.
interp::ModelFinder make_model_finder(Checker& checker, const lang::Program& p);

}  // namespace sipinv::solver
