// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria.

#include <sipinv/engine/engine.hpp>
#include <sipinv/lang/parser.hpp>
#include <sipinv/lang/pretty.hpp>

#include "../support/fixtures.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace sipinv;
using engine::Characterization;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned limits.
constexpr double kNarrativeTimeout = 10.0;        // seconds per prover query
constexpr double kNarrativeWallLimit = 120.0;     // seconds
constexpr int kFixpointLevels = 50;
constexpr int kFixpointMaxPotential = 6;
constexpr double kFixpointWallLimit = 600.0;      // seconds
constexpr int kSoundnessSteps = 1000;
constexpr int kRuntimeSamples = 1000;
constexpr std::size_t kAllowedMismatches = 0;

solver::SolverConfig prover_config(double timeout = 10.0) {
  solver::SolverConfig cfg;
  cfg.timeout_seconds = timeout;
  cfg.fuzz_samples = 500;
  cfg.pool_size = 16;
  return cfg;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

engine::Invariant inv(const lang::Program& p, const std::string& text) {
  return engine::make_invariant(text, lang::parse_expr(text, p.env));
}

bool proved(solver::Checker& c, const lang::Program& p, const vcgen::Goal& g) {
  return std::holds_alternative<solver::Proved>(c.check(p, g, solver::QueryKind::Other));
}

/// Proposal sequences that solve each fixture level.
const std::map<std::string, std::vector<std::string>> kSolutions = {
    {"isqrt", {"odd >= 1", "cnt >= 0", "odd % 2 = 1", "sqr = (cnt+1)^2", "sqr >= odd", "odd = cnt*2+1", "cnt^2 <= n"}},
    {"sum", {"i <= n", "2*s = i*(i+1)"}},
    {"multiply", {"i <= x", "r = i*y"}},
    {"countdown", {"j >= 0"}},
    {"halves", {"x > 0", "x <= 1"}},
    {"evens", {"i <= n", "2*e >= i & 2*e <= i + 1"}},
    {"trivial", {}},
};

/// Implied, weaker companions used to give rem_displaced something to drop.
const std::map<std::string, std::vector<std::string>> kRedundant = {
    {"isqrt", {"sqr >= 1", "odd >= cnt"}},
    {"sum", {"i <= n + 1", "s >= 0 | i < 0"}},
    {"multiply", {"i <= x + 3"}},
    {"countdown", {"j >= -1", "j + 1 >= 0"}},
    {"halves", {"x >= 0", "x < 2"}},
    {"evens", {"2*e >= i - 1", "e <= n"}},
    {"trivial", {"y = y"}},
};

/// Small template family over a level's numeric variables.
std::vector<std::string> template_pool(const lang::Program& p) {
  std::vector<std::string> vars;
  for (const auto& [name, t] : p.env)
    if (t != lang::Type::Boolean && !name.starts_with("__")) vars.push_back(name);
  std::vector<std::string> out;
  for (const auto& v : vars) {
    for (int c = -1; c <= 2; ++c) {
      out.push_back(v + " >= " + std::to_string(c));
      out.push_back(v + " <= " + std::to_string(c));
    }
    out.push_back(v + " = 0");
    for (const auto& w : vars) {
      if (v == w) continue;
      out.push_back(v + " <= " + w);
      out.push_back(v + " = " + w);
      for (int a : {2, -1})
        for (int b : {-1, 0, 1}) out.push_back(v + " = " + std::to_string(a) + "*" + w + " + " + std::to_string(b));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome narrative_replay() {
  auto t0 = Clock::now();
  auto p = fixtures::level_program("isqrt");
  solver::Prover prover(prover_config(kNarrativeTimeout));
  engine::Engine eng(p, prover);
  engine::InvariantState s;
  const auto& seq = kSolutions.at("isqrt");
  const std::vector<Characterization> expected = {Characterization::Inductive, Characterization::Inductive,
                                                  Characterization::Inductive, Characterization::Potential,
                                                  Characterization::Inductive, Characterization::Inductive,
                                                  Characterization::Inductive};
  std::ostringstream why;
  bool ok = true;
  bool solved_early = false;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    auto r = eng.propose_loop_inv(s, inv(p, seq[i]));
    s = r.state;
    if (r.kind != expected[i]) {
      ok = false;
      why << seq[i] << " gave " << engine::to_string(r.kind) << "; ";
    }
    if (i == 5) {
      std::vector<std::string> promoted;
      for (const auto& x : r.feedback.promoted) promoted.push_back(x.key);
      if (promoted != std::vector<std::string>{"sqr = (cnt + 1) * (cnt + 1)"} || r.feedback.removed.size() != 3) {
        ok = false;
        why << "promotion step promoted " << promoted.size() << ", removed " << r.feedback.removed.size() << "; ";
      }
    }
    if (i + 1 < seq.size() && eng.check_solved(s).solved) solved_early = true;
  }
  bool solved = eng.check_solved(s).solved;
  double wall = seconds_since(t0);
  ok = ok && solved && !solved_early && wall <= kNarrativeWallLimit;
  why << "solved=" << solved << " early=" << solved_early << " wall=" << wall << "s";
  return {ok, why.str()};
}

/// Random linear loop with candidate potential invariants.
struct LinearCase {
  lang::Program p;
  std::vector<lang::ExprPtr> inductive;
  std::vector<lang::ExprPtr> potential;
};

LinearCase random_linear_case(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::ostringstream src;
  src << "fn rl(n: Natural): Integer {\n  post(true);\n  var a: Integer;\n  var b: Integer;\n  var c: Integer;\n"
      << "  a := " << pick(-2, 2) << ";\n  b := " << pick(-2, 2) << ";\n  c := " << pick(-2, 2) << ";\n"
      << "  while (a < n) {\n"
      << "    a := a + " << pick(0, 2) << ";\n"
      << "    b := b + " << pick(0, 2) << "*a + " << pick(-1, 1) << ";\n"
      << "    c := c + " << pick(-1, 1) << "*b + " << pick(-1, 2) << ";\n"
      << "  }\n}\n";
  LinearCase lc;
  lc.p = lang::load_program(src.str());
  const char* vars[] = {"a", "b", "c", "n"};
  auto var = [&] { return std::string(vars[pick(0, 3)]); };
  auto candidate = [&]() -> std::string {
    switch (pick(0, 4)) {
      case 0:
        return var() + " >= " + std::to_string(pick(-2, 2));
      case 1:
        return var() + " <= " + std::to_string(pick(-2, 2));
      case 2:
        return var() + " >= " + var();
      case 3:
        return var() + " = " + std::to_string(pick(0, 2)) + "*" + var() + " + " + std::to_string(pick(-1, 1));
      default:
        return var() + " + " + var() + " >= " + std::to_string(pick(-2, 2));
    }
  };
  int m = pick(1, kFixpointMaxPotential);
  std::set<std::string> seen;
  while (static_cast<int>(lc.potential.size()) < m) {
    auto e = lang::parse_expr(candidate(), lc.p.env);
    if (seen.insert(lang::to_string(*e)).second) lc.potential.push_back(e);
  }
  if (pick(0, 1)) lc.inductive.push_back(lang::parse_expr(candidate(), lc.p.env));
  return lc;
}

Outcome greatest_fixpoint() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(20240607);
  solver::Prover engine_prover(prover_config());
  solver::Prover oracle_prover(prover_config());
  int conclusive = 0, attempts = 0, wrong = 0, serial_parallel = 0, nontrivial = 0;
  std::ostringstream why;
  while (conclusive < kFixpointLevels && attempts < 3 * kFixpointLevels) {
    ++attempts;
    auto lc = random_linear_case(rng);
    const std::size_t m = lc.potential.size();
    // brute force: the union of all consecution-closed subsets
    std::vector<int> closed(std::size_t{1} << m, 0);  // 1 closed, 0 not, -1 undecided
    const int masks = static_cast<int>(closed.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int mask = 0; mask < masks; ++mask) {
      std::vector<lang::ExprPtr> hyps = lc.inductive;
      for (std::size_t k = 0; k < m; ++k)
        if (mask >> k & 1) hyps.push_back(lc.potential[k]);
      int verdict = 1;
      for (std::size_t j = 0; j < m && verdict == 1; ++j) {
        if (!(mask >> j & 1)) continue;
        auto v = oracle_prover.check(lc.p, vcgen::build_consecution(lc.p, hyps, lc.potential[j]),
                                     solver::QueryKind::Other);
        if (std::holds_alternative<solver::Unknown>(v)) verdict = -1;
        if (std::holds_alternative<solver::Counterexample>(v)) verdict = 0;
      }
      closed[static_cast<std::size_t>(mask)] = verdict;
    }
    if (std::any_of(closed.begin(), closed.end(), [](int c) { return c < 0; })) continue;
    std::size_t gfp = 0;
    for (std::size_t mask = 0; mask < closed.size(); ++mask)
      if (closed[mask] == 1) gfp |= mask;
    engine::Engine eng(lc.p, engine_prover);
    auto serial = eng.promotable_serial(lc.inductive, lc.potential);
    auto parallel = eng.promotable_parallel(lc.inductive, lc.potential);
    std::size_t got = 0;
    for (auto j : serial) got |= std::size_t{1} << j;
    ++conclusive;
    if (gfp != 0 && gfp != closed.size() - 1) ++nontrivial;
    if (got != gfp || closed[gfp] != 1) {
      ++wrong;
      why << "case " << attempts << ": engine " << got << " oracle " << gfp << "; ";
    }
    if (serial != parallel) ++serial_parallel;
  }
  double wall = seconds_since(t0);
  bool ok = conclusive >= kFixpointLevels && wrong == 0 && serial_parallel == 0 && wall <= kFixpointWallLimit;
  why << conclusive << " levels (" << nontrivial << " with a proper nonempty fixpoint), " << wrong
      << " wrong, serial/parallel disagreements " << serial_parallel << ", wall=" << wall << "s";
  return {ok, why.str()};
}

Outcome counterexample_replay() {
  std::size_t traces = 0, rule_outs = 0, pairs = 0, mismatches = 0, missing = 0;
  std::ostringstream why;
  std::mutex mu;
  auto ids = fixtures::level_ids();
#pragma omp parallel for schedule(dynamic, 1)
  for (int li = 0; li < static_cast<int>(ids.size()); ++li) {
    const auto& id = ids[static_cast<std::size_t>(li)];
    auto p = fixtures::level_program(id);
    solver::Prover prover(prover_config());
    engine::Engine eng(p, prover);
    auto pool = template_pool(p);
    std::mt19937_64 rng(1000 + static_cast<unsigned>(li));
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min<std::size_t>(pool.size(), 30));
    for (const auto& s : kSolutions.at(id)) pool.push_back(s);
    engine::InvariantState st;
    std::size_t t = 0, r = 0, q = 0, bad = 0, miss = 0;
    std::vector<std::string> notes;
    auto audit = [&](const engine::InvariantState& s, const lang::ExprPtr& e, const engine::Feedback& f) {
      auto problems = engine::audit_feedback(p, s, e, f);
      bad += problems.size();
      for (auto& pr : problems) notes.push_back(id + ": " + pr);
    };
    for (const auto& text : pool) {
      auto e = inv(p, text);
      if (st.contains(e.key)) continue;
      auto res = eng.propose_loop_inv(st, e);
      st = res.state;
      if (res.kind == Characterization::NonInv) {
        if (res.feedback.trace) {
          ++t;
          audit(st, e.expr, res.feedback);
        } else {
          ++miss;
          notes.push_back(id + ": no trace for " + text);
        }
      }
      auto solved = eng.check_solved(st);
      auto f = eng.gen_feedback(st, solved);
      if (f.rule_out) {
        ++r;
        audit(st, nullptr, f);
      }
      for (const auto& pot : st.potential) {
        auto w = eng.why_not_inductive(st, pot.key);
        if (w.error) continue;
        ++q;
        engine::Feedback pf;
        pf.state_pair = w.pair;
        pf.pair_choices = w.choices;
        audit(st, pot.expr, pf);
      }
    }
    std::lock_guard lock(mu);
    traces += t;
    rule_outs += r;
    pairs += q;
    mismatches += bad;
    missing += miss;
    for (std::size_t i = 0; i < notes.size() && i < 3; ++i) why << notes[i] << "; ";
  }
  bool ok = mismatches + missing <= kAllowedMismatches && traces > 0 && rule_outs > 0 && pairs > 0;
  why << traces << " traces, " << rule_outs << " rule-out states, " << pairs << " state pairs, " << mismatches
      << " mismatches, " << missing << " NonInv without trace";
  return {ok, why.str()};
}

Outcome soundness_audit() {
  auto ids = fixtures::level_ids();
  std::size_t checks = 0, failures = 0, inconclusive = 0, mutations = 0;
  std::ostringstream why;
  std::mutex mu;
  const int n = static_cast<int>(ids.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int li = 0; li < n; ++li) {
    const auto& id = ids[static_cast<std::size_t>(li)];
    auto p = fixtures::level_program(id);
    solver::Prover prover(prover_config());
    solver::Prover auditor(prover_config());
    engine::Engine eng(p, prover);
    auto pool = template_pool(p);
    for (const auto& s : kSolutions.at(id)) pool.push_back(s);
    for (const auto& s : kRedundant.at(id)) pool.push_back(s);
    std::mt19937_64 rng(77 + static_cast<unsigned>(li));
    auto pick = [&](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
    const int steps = kSoundnessSteps / n + (li < kSoundnessSteps % n ? 1 : 0);
    engine::InvariantState st;
    std::size_t c = 0, f = 0, u = 0, m = 0;
    std::vector<std::string> notes;
    for (int step = 0; step < steps; ++step) {
      auto op = pick(10);
      engine::InvariantState next = st;
      if (op < 6) {
        auto e = inv(p, pool[pick(pool.size())]);
        if (st.contains(e.key)) continue;
        next = eng.propose_loop_inv(st, e).state;
      } else if (op == 6) {
        next = eng.promote(st).state;
      } else if (op == 7) {
        next = eng.rem_displaced(st).state;
      } else if (op == 8) {
        if (!st.potential.empty()) eng.why_not_inductive(st, st.potential[pick(st.potential.size())].key);
        continue;
      } else {
        next = engine::InvariantState{};
      }
      st = next;
      ++m;
      if (st.inductive.empty()) continue;
      auto conj = lang::conjoin(st.inductive_exprs());
      std::vector<lang::ExprPtr> hyps = {conj};
      for (auto g : {vcgen::build_upto_loop(p, conj), vcgen::build_consecution(p, hyps, conj)}) {
        auto v = auditor.check(p, g, solver::QueryKind::Other);
        ++c;
        if (std::holds_alternative<solver::Unknown>(v)) {
          ++u;
        } else if (!std::holds_alternative<solver::Proved>(v)) {
          ++f;
          notes.push_back(id + ": " + lang::to_string(*conj));
        }
      }
    }
    std::lock_guard lock(mu);
    checks += c;
    failures += f;
    inconclusive += u;
    mutations += m;
    for (std::size_t i = 0; i < notes.size() && i < 3; ++i) why << notes[i] << "; ";
  }
  why << mutations << " mutations, " << checks << " checks, " << failures << " failures, " << inconclusive
      << " inconclusive";
  return {failures == 0, why.str()};
}

/// Proposes the known solution; returns the final state when the level ends
/// solved.
std::optional<engine::InvariantState> solve(const lang::Program& p, const std::string& id, solver::Checker& c) {
  engine::Engine eng(p, c);
  engine::InvariantState st;
  for (const auto& text : kSolutions.at(id)) st = eng.propose_loop_inv(st, inv(p, text)).state;
  if (!eng.check_solved(st).solved) return std::nullopt;
  return st;
}

Outcome runtime_correctness() {
  std::size_t levels = 0, runs = 0, violations = 0, unsolved = 0;
  std::ostringstream why;
  for (const auto& id : fixtures::level_ids()) {
    auto p = fixtures::level_program(id);
    solver::Prover prover(prover_config());
    if (!solve(p, id, prover)) {
      ++unsolved;
      why << id << " not solved by its fixture solution; ";
      continue;
    }
    ++levels;
    interp::Rng rng(4242);
    for (int i = 0; i < kRuntimeSamples; ++i) {
      auto in = interp::sample_inputs(p, rng);
      if (!in) continue;
      interp::ExecOptions opts;
      opts.seed = rng();
      opts.finder = solver::make_model_finder(prover, p);
      auto t = interp::exec_trace(p, *in, opts);
      ++runs;
      if (t.outcome != interp::TraceOutcome::Completed || t.guarantee_holds != true) {
        ++violations;
        if (violations <= 3) why << id << " fails on " << interp::render(in->values.begin()->second) << "; ";
      }
    }
  }
  why << levels << " solved levels, " << runs << " runs, " << violations << " violations";
  return {unsolved == 0 && violations == 0 && runs == levels * kRuntimeSamples, why.str()};
}

Outcome type_tautology_example() {
  auto p = fixtures::level_program("multiply");
  solver::Prover prover(prover_config());
  engine::Engine eng(p, prover);
  auto r = eng.propose_loop_inv({}, inv(p, "y - x <= y"));
  return {r.kind == Characterization::TypeTautology, std::string("y - x <= y -> ") + std::string(engine::to_string(r.kind))};
}

Outcome rem_displaced_equivalence() {
  std::size_t levels = 0, failures = 0, removed = 0;
  std::ostringstream why;
  for (const auto& id : fixtures::level_ids()) {
    auto p = fixtures::level_program(id);
    solver::Prover prover(prover_config());
    solver::Prover oracle(prover_config());
    engine::Engine eng(p, prover);
    engine::InvariantState st;
    for (const auto& t : kSolutions.at(id)) st.inductive.push_back(inv(p, t));
    for (const auto& t : kRedundant.at(id)) st.inductive.push_back(inv(p, t));
    auto r = eng.rem_displaced(st);
    removed += r.removed.size();
    auto before = st.inductive_exprs(), after = r.state.inductive_exprs();
    bool fwd = proved(oracle, p, vcgen::build_assertion(p, before, lang::conjoin(after)));
    bool back = proved(oracle, p, vcgen::build_assertion(p, after, lang::conjoin(before)));
    ++levels;
    if (!fwd || !back) {
      ++failures;
      why << id << " not equivalent; ";
    }
  }
  why << levels << " fixtures, " << removed << " invariants removed, " << failures << " failures";
  return {failures == 0 && removed > 0, why.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"narrative-replay", narrative_replay},
      {"greatest-fixpoint-oracle", greatest_fixpoint},
      {"counterexample-replay", counterexample_replay},
      {"soundness-audit", soundness_audit},
      {"solved-implies-runtime-correctness", runtime_correctness},
      {"type-tautology-example", type_tautology_example},
      {"rem-displaced-equivalence", rem_displaced_equivalence},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& err) {
      o = {false, std::string("exception: ") + err.what()};
    }
    failed += !o.pass;
    std::printf("%s %s (%.1fs) %s\n", o.pass ? "PASS" : "FAIL", c.name, seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
