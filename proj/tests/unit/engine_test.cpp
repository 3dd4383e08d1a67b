#include <sipinv/engine/engine.hpp>
#include <sipinv/lang/parser.hpp>
#include <sipinv/lang/pretty.hpp>

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

using namespace sipinv;
using namespace sipinv::engine;
using C = Characterization;

namespace {

solver::SolverConfig config() {
  solver::SolverConfig cfg;
  cfg.timeout_seconds = 10;
  cfg.fuzz_samples = 500;
  return cfg;
}

Invariant inv(const lang::Program& p, const std::string& text) {
  return make_invariant(text, lang::parse_expr(text, p.env));
}

std::vector<std::string> keys(const std::vector<Invariant>& v) {
  std::vector<std::string> out;
  for (const auto& i : v) out.push_back(i.key);
  return out;
}

struct Session {
  explicit Session(const std::string& level, EngineConfig cfg = {})
      : p(fixtures::level_program(level)), prover(config()), engine(p, prover, cfg) {}

  ProposalResult propose(const std::string& text) {
    auto r = engine.propose_loop_inv(state, inv(p, text));
    state = r.state;
    return r;
  }

  lang::Program p;
  solver::Prover prover;
  Engine engine;
  InvariantState state;
};

// a = b and b = c hold on every run but need d = 0 to be inductive.
const char* kThree = R"(fn three(a: Integer): Integer {
  post(true);
  var b: Integer;
  var c: Integer;
  var d: Integer;
  b := a;
  c := a;
  d := 0;
  while (a < 0) {
    if (d != 0) {
      b := b + 1;
      c := c + 2;
    }
    a := a + 1;
    b := b + 1;
    c := c + 1;
  }
})";

}  // namespace

TEST(Engine, IsqrtNarrative) {
  Session s("isqrt");
  EXPECT_EQ(s.propose("odd >= 1").kind, C::Inductive);
  EXPECT_EQ(s.propose("cnt >= 0").kind, C::Inductive);
  EXPECT_EQ(s.propose("odd % 2 = 1").kind, C::Inductive);
  EXPECT_EQ(s.propose("sqr = (cnt+1)^2").kind, C::Potential);
  EXPECT_EQ(s.propose("sqr >= odd").kind, C::Inductive);
  auto r = s.propose("odd = cnt*2 + 1");
  EXPECT_EQ(r.kind, C::Inductive);
  EXPECT_EQ(keys(r.feedback.promoted), std::vector<std::string>{"sqr = (cnt + 1) * (cnt + 1)"});
  EXPECT_EQ(keys(r.feedback.removed), (std::vector<std::string>{"odd >= 1", "odd % 2 = 1", "sqr >= odd"}));
  EXPECT_FALSE(s.engine.check_solved(s.state).solved);
  EXPECT_EQ(s.propose("cnt^2 <= n").kind, C::Inductive);
  EXPECT_EQ(keys(s.state.inductive),
            (std::vector<std::string>{"cnt >= 0", "sqr = (cnt + 1) * (cnt + 1)", "odd = cnt * 2 + 1", "cnt * cnt <= n"}));
  EXPECT_TRUE(s.state.potential.empty());
  EXPECT_TRUE(s.engine.check_solved(s.state).solved);
}

TEST(Engine, DisplacedByInductive) {
  Session s("isqrt");
  s.propose("odd >= 1");
  auto before = s.state;
  auto r = s.propose("odd >= 0");
  EXPECT_EQ(r.kind, C::Displaced);
  EXPECT_EQ(keys(r.state.inductive), keys(before.inductive));
}

TEST(Engine, NonInvTraceStartsAtLoopEntry) {
  Session s("isqrt");
  auto e = inv(s.p, "cnt >= 1");
  auto r = s.engine.propose_loop_inv(s.state, e);
  ASSERT_EQ(r.kind, C::NonInv);
  ASSERT_TRUE(r.feedback.trace);
  ASSERT_EQ(r.feedback.trace->rows.size(), 1u);
  EXPECT_EQ(interp::render(r.feedback.trace->rows[0].at("cnt")), "0");
  EXPECT_TRUE(audit_feedback(s.p, r.state, e.expr, r.feedback).empty());
}

TEST(Engine, NonInvFoundByUnrolling) {
  Session s("isqrt");
  auto e = inv(s.p, "cnt <= 2");
  auto r = s.engine.propose_loop_inv(s.state, e);
  ASSERT_EQ(r.kind, C::NonInv);
  ASSERT_TRUE(r.feedback.trace);
  EXPECT_EQ(interp::render(r.feedback.trace->rows.back().at("cnt")), "3");
  EXPECT_TRUE(audit_feedback(s.p, r.state, e.expr, r.feedback).empty());
}

TEST(Engine, NonInvWithChoices) {
  Session s("countdown");
  auto e = inv(s.p, "j = n | j = 0");
  auto r = s.engine.propose_loop_inv(s.state, e);
  ASSERT_EQ(r.kind, C::NonInv);
  ASSERT_TRUE(r.feedback.trace);
  auto problems = audit_feedback(s.p, r.state, e.expr, r.feedback);
  EXPECT_TRUE(problems.empty()) << (problems.empty() ? "" : problems.front());
}

TEST(Engine, TypeTautologies) {
  Session s("multiply");
  EXPECT_EQ(s.propose("y - x <= y").kind, C::TypeTautology);
  EXPECT_EQ(s.propose("i >= 0").kind, C::TypeTautology);
  EXPECT_EQ(s.propose("1 < 2").kind, C::TypeTautology);
  EXPECT_TRUE(s.state.inductive.empty());
  EXPECT_TRUE(s.state.potential.empty());
}

TEST(Engine, DisplacedByPotentialSingle) {
  Session s("isqrt");
  ASSERT_EQ(s.propose("sqr = (cnt+1)^2").kind, C::Potential);
  auto r = s.propose("(cnt+1)^2 = sqr");
  EXPECT_EQ(r.kind, C::DisplacedPot);
  EXPECT_EQ(s.state.potential.size(), 1u);
}

TEST(Engine, DisplacedByPotentialPair) {
  auto p = lang::load_program(kThree);
  solver::Prover prover(config());
  Engine engine(p, prover);
  InvariantState st;
  for (const char* text : {"a = b", "b = c"}) {
    auto r = engine.propose_loop_inv(st, inv(p, text));
    ASSERT_EQ(r.kind, C::Potential) << text;
    st = r.state;
  }
  EXPECT_EQ(engine.propose_loop_inv(st, inv(p, "a = c & b = c")).kind, C::DisplacedPot);
  Engine narrow(p, prover, EngineConfig{.unroll_bound = 5, .max_subset = 1});
  EXPECT_EQ(narrow.propose_loop_inv(st, inv(p, "a = c & b = c")).kind, C::Potential);
}

TEST(Engine, Duplicates) {
  Session s("isqrt");
  s.propose("cnt >= 0");
  s.propose("sqr = (cnt+1)^2");
  EXPECT_THROW(s.propose("cnt >= 0"), DuplicateInvariant);
  EXPECT_THROW(s.propose("sqr = (cnt + 1) * (cnt + 1)"), DuplicateInvariant);
}

TEST(Engine, TrivialLevelIsSolvedFromTheStart) {
  Session s("trivial");
  auto solved = s.engine.check_solved(s.state);
  EXPECT_TRUE(solved.solved);
  EXPECT_TRUE(s.engine.gen_feedback(s.state, solved).solved);
}

TEST(Engine, FeedbackRuleOut) {
  Session s("isqrt");
  s.propose("cnt >= 0");
  s.propose("sqr = (cnt+1)^2");
  auto solved = s.engine.check_solved(s.state);
  ASSERT_FALSE(solved.solved);
  ASSERT_TRUE(solved.counterexample);
  auto f = s.engine.gen_feedback(s.state, solved);
  ASSERT_TRUE(f.rule_out);
  EXPECT_TRUE(f.rule_out_covers_potential);
  EXPECT_TRUE(audit_feedback(s.p, s.state, nullptr, f).empty());
}

TEST(Engine, WhyNot) {
  Session s("isqrt");
  ASSERT_EQ(s.propose("sqr = (cnt+1)^2").kind, C::Potential);
  auto w = s.engine.why_not_inductive(s.state, "sqr = (cnt + 1) * (cnt + 1)");
  ASSERT_FALSE(w.error) << w.diagnostic;
  ASSERT_TRUE(w.pair);
  Feedback f;
  f.state_pair = w.pair;
  f.pair_choices = w.choices;
  auto q = s.state.potential.front().expr;
  EXPECT_TRUE(audit_feedback(s.p, s.state, q, f).empty());
  EXPECT_TRUE(interp::holds(*q, w.pair->first));
  EXPECT_FALSE(interp::holds(*q, w.pair->second));

  auto missing = s.engine.why_not_inductive(s.state, "cnt >= 7");
  EXPECT_EQ(missing.error, WhyNotError::NotPotential);

  InvariantState manual;
  manual.potential.push_back(inv(s.p, "cnt >= 0"));
  EXPECT_EQ(s.engine.why_not_inductive(manual, "cnt >= 0").error, WhyNotError::Promotable);
}

TEST(Engine, WhyNotWithChoices) {
  Session s("countdown");
  InvariantState st;
  st.potential.push_back(inv(s.p, "k = 0"));
  auto w = s.engine.why_not_inductive(st, "k = 0");
  ASSERT_FALSE(w.error) << w.diagnostic;
  Feedback f;
  f.state_pair = w.pair;
  f.pair_choices = w.choices;
  EXPECT_TRUE(audit_feedback(s.p, st, st.potential.front().expr, f).empty());
}

TEST(Engine, RemDisplacedKeepsConjunction) {
  Session s("isqrt");
  InvariantState st;
  for (const char* t : {"odd >= 1", "cnt >= 0", "odd % 2 = 1", "odd = 2*cnt + 1", "sqr >= odd"})
    st.inductive.push_back(inv(s.p, t));
  auto r = s.engine.rem_displaced(st);
  EXPECT_EQ(keys(r.removed), (std::vector<std::string>{"odd >= 1", "odd % 2 = 1"}));
  EXPECT_EQ(keys(r.state.inductive), (std::vector<std::string>{"cnt >= 0", "odd = 2 * cnt + 1", "sqr >= odd"}));
}

// The fixpoint does not depend on the sweep order.
TEST(Engine, SerialAndParallelPromoteAgree) {
  auto p = fixtures::level_program("isqrt");
  solver::Prover prover(config());
  Engine engine(p, prover);
  std::vector<std::vector<const char*>> sets = {
      {"sqr = (cnt+1)^2", "odd = 2*cnt + 1", "cnt <= 3"},
      {"sqr = (cnt+1)^2", "cnt >= 0"},
      {"cnt * cnt <= n", "sqr <= n + 100", "odd >= cnt"},
      {},
  };
  for (const auto& set : sets) {
    std::vector<lang::ExprPtr> es;
    for (const char* t : set) es.push_back(lang::parse_expr(t, p.env));
    EXPECT_EQ(engine.promotable_serial({}, es), engine.promotable_parallel({}, es));
  }
  std::vector<lang::ExprPtr> first = {lang::parse_expr("sqr = (cnt+1)^2", p.env),
                                      lang::parse_expr("odd = 2*cnt + 1", p.env),
                                      lang::parse_expr("cnt <= 3", p.env)};
  EXPECT_EQ(engine.promotable_serial({}, first), (std::vector<std::size_t>{0, 1}));
}

TEST(Engine, ProverFailureIsUnknown) {
  auto p = fixtures::level_program("isqrt");
  auto cfg = config();
  cfg.command = (fixtures::fixtures_dir() / "prover_garbage.sh").string();
  cfg.fuzz_samples = 0;
  solver::Prover prover(cfg);
  std::vector<Event> events;
  Engine engine(p, prover, {}, [&](const Event& e) { events.push_back(e); });
  auto r = engine.propose_loop_inv({}, inv(p, "cnt >= 0"));
  EXPECT_EQ(r.kind, C::Unknown);
  EXPECT_FALSE(r.feedback.diagnostic.empty());
  EXPECT_TRUE(r.state.inductive.empty() && r.state.potential.empty());
  EXPECT_TRUE(std::any_of(events.begin(), events.end(), [](const Event& e) { return e.type == "error"; }));
}

TEST(Engine, Scores) {
  EXPECT_EQ(proposal_score(C::Inductive), 3);
  EXPECT_EQ(proposal_score(C::Potential), 2);
  for (auto c : {C::TypeTautology, C::Displaced, C::DisplacedPot, C::NonInv, C::Unknown}) EXPECT_EQ(proposal_score(c), 0);
}
