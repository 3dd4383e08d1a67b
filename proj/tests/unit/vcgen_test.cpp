#include <sipinv/interp/interp.hpp>
#include <sipinv/lang/parser.hpp>
#include <sipinv/lang/pretty.hpp>
#include <sipinv/solver/solver.hpp>
#include <sipinv/vcgen/vcgen.hpp>

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

using namespace sipinv;
using namespace sipinv::vcgen;

namespace {

lang::ExprPtr expr(const lang::Program& p, const char* src) { return lang::parse_expr(src, p.env); }

int count_marks(const lang::Stmt& s) {
  if (std::holds_alternative<lang::LoopHeadMark>(s.node)) return 1;
  int n = 0;
  if (const auto* b = std::get_if<lang::Block>(&s.node)) {
    for (const auto& c : b->stmts) n += count_marks(*c);
  }
  if (const auto* i = std::get_if<lang::If>(&s.node)) n += count_marks(*i->then_branch) + count_marks(*i->else_branch);
  return n;
}

bool has_cassign(const Goal& g) { return !cassign_occurrences(g).empty(); }

/// Satisfiability of the formula with every input pinned, per state, in one
/// prover run.
std::vector<std::string> pinned_verdicts(const Goal& g, const std::vector<interp::State>& states) {
  Formula f = symexec_to_vc(g);
  std::string script = f.to_smtlib();
  script = script.substr(0, script.find("(check-sat)"));
  for (const auto& st : states) {
    script += "(push 1)\n";
    for (const auto& [var, constant] : f.inputs) {
      auto sort = g.env.at(var) == lang::Type::Boolean  ? Sort::Bool
                  : g.env.at(var) == lang::Type::Rational ? Sort::Real
                                                          : Sort::Int;
      const auto& v = st.at(var);
      std::string lit = sort == Sort::Bool ? interp::render(v) : smt_literal(interp::as_rational(v), sort);
      script += "(assert (= " + constant + " " + lit + "))\n";
    }
    script += "(check-sat)\n(pop 1)\n";
  }
  auto out = solver::run_process(solver::split_command("z3 -in -smt2"), script, std::chrono::seconds(60));
  std::vector<std::string> verdicts;
  for (const auto& s : solver::parse_sexprs(out.out)) verdicts.push_back(s.atom);
  return verdicts;
}

}  // namespace

TEST(Goals, UptoLoopDropsDeclarations) {
  auto p = fixtures::level_program("isqrt");
  Goal g = build_upto_loop(p, expr(p, "odd >= 1"));
  ASSERT_EQ(g.stmts.size(), 4u);  // three assignments and the assert
  validate(g);
  EXPECT_TRUE(std::holds_alternative<lang::Assert>(g.stmts.back()->node));
}

TEST(Goals, UnrolledShape) {
  auto p = fixtures::level_program("isqrt");
  Goal g = build_loop_unrolled(p, expr(p, "cnt >= 0"), 5);
  validate(g);
  int marks = 0;
  for (const auto& s : g.stmts) marks += count_marks(*s);
  EXPECT_EQ(marks, 6);
  EXPECT_EQ(cassign_occurrences(g).size(), 5u);
  for (int i = 1; i <= 5; ++i) EXPECT_EQ(g.env.at("__gate" + std::to_string(i)), lang::Type::Boolean);
  EXPECT_THROW(build_loop_unrolled(p, expr(p, "cnt >= 0"), 0), std::invalid_argument);
}

TEST(Goals, UnrolledClonesBodyCAssigns) {
  auto p = fixtures::level_program("countdown");
  Goal g = build_loop_unrolled(p, expr(p, "j >= 0"), 3);
  auto occ = cassign_occurrences(g);
  ASSERT_EQ(occ.size(), 6u);  // gate and body cassign per copy
  std::set<const lang::Stmt*> distinct(occ.begin(), occ.end());
  EXPECT_EQ(distinct.size(), occ.size());
}

TEST(Goals, ConsecutionAndExit) {
  auto p = fixtures::level_program("isqrt");
  std::vector<lang::ExprPtr> hyps = {expr(p, "cnt >= 0")};
  Goal c = build_consecution(p, hyps, expr(p, "cnt >= 0"));
  EXPECT_EQ(lang::to_string(*c.stmts.front()), "assume(cnt >= 0 & sqr <= n);\n");
  Goal e = build_exit_check(p, hyps);
  EXPECT_EQ(lang::to_string(*e.stmts.front()), "assume(cnt >= 0 & !(sqr <= n));\n");
  EXPECT_EQ(lang::to_string(*e.stmts.back()), "assert(cnt * cnt <= n & n < (cnt + 1) * (cnt + 1));\n");
}

TEST(Goals, RejectsMalformed) {
  Goal empty;
  EXPECT_THROW(validate(empty), std::invalid_argument);
  Goal no_assert{{}, {lang::make_stmt(lang::Assume{lang::make_bool(true)})}};
  EXPECT_THROW(validate(no_assert), std::invalid_argument);
}

TEST(Symexec, FormulaShape) {
  auto p = fixtures::level_program("multiply");
  Goal g = build_consecution(p, std::vector<lang::ExprPtr>{expr(p, "i <= x")}, expr(p, "i <= x"));
  Formula f = symexec_to_vc(g);
  EXPECT_EQ(f.inputs.size(), p.env.size());
  // i and x are Natural; the assignment to i must stay non-negative
  EXPECT_EQ(f.type_constraints.size(), 2u);
  std::string smt = f.to_smtlib(2.5);
  EXPECT_NE(smt.find("(set-option :timeout 2500)"), std::string::npos);
  EXPECT_NE(smt.find("(check-sat)"), std::string::npos);
  EXPECT_EQ(f.to_smtlib(0.0).find("(set-option :timeout 0)"), std::string::npos);
}

TEST(Symexec, Literals) {
  EXPECT_EQ(smt_literal(mpq_class(-3), Sort::Int), "(- 3)");
  EXPECT_EQ(smt_literal(mpq_class(7), Sort::Int), "7");
  EXPECT_EQ(smt_literal(mpq_class(-1, 3), Sort::Real), "(- (/ 1.0 3.0))");
  EXPECT_EQ(smt_literal(mpq_class(5, 2), Sort::Real), "(/ 5.0 2.0)");
}

TEST(Symexec, RejectsLoops) {
  auto p = fixtures::level_program("isqrt");
  lang::StmtPtr loop = lang::make_stmt(lang::While{nullptr, p.test, p.body});
  Goal g{p.env, {loop, lang::make_stmt(lang::Assert{p.post, false})}};
  EXPECT_THROW(symexec_to_vc(g), std::invalid_argument);
}

// Differential property: with all inputs pinned, the formula is satisfiable
// exactly when concrete execution of the goal violates it.
TEST(Symexec, AgreesWithConcreteExecution) {
  const char* candidates[][2] = {
      {"isqrt", "odd >= 1"},      {"isqrt", "sqr = (cnt+1)^2"}, {"isqrt", "cnt * cnt <= n"},
      {"isqrt", "odd % 2 = 1"},   {"sum", "2*s = i*(i+1)"},     {"sum", "i <= n"},
      {"multiply", "r = i*y"},    {"multiply", "i <= x"},       {"halves", "x <= 1"},
      {"halves", "x > 0 & i >= 0"}, {"evens", "2*e >= i"},      {"evens", "2*e <= i + 1"},
      {"trivial", "y >= 0"},
  };
  std::size_t checked = 0, violated = 0;
  for (const auto& [level, text] : candidates) {
    auto p = fixtures::level_program(level);
    auto e = expr(p, text);
    std::vector<lang::ExprPtr> hyps = {e};
    std::vector<Goal> goals = {build_upto_loop(p, e), build_consecution(p, hyps, e), build_exit_check(p, hyps),
                               build_assertion(p, hyps, p.post)};
    for (auto& g : goals) {
      ASSERT_FALSE(has_cassign(g));
      std::vector<interp::State> states;
      auto rng = interp::stream_rng(2024, checked);
      for (int i = 0; i < 12; ++i) states.push_back(interp::sample_state(g.env, rng));
      auto verdicts = pinned_verdicts(g, states);
      ASSERT_EQ(verdicts.size(), states.size()) << level << ": " << text;
      for (std::size_t i = 0; i < states.size(); ++i) {
        auto run = interp::run_statements(g.stmts, g.env, states[i]);
        bool bad = run.outcome == interp::RunOutcome::Violated;
        EXPECT_EQ(verdicts[i], bad ? "sat" : "unsat") << level << ": " << text << "\n" << to_string(g);
        violated += bad;
        ++checked;
      }
    }
  }
  EXPECT_GT(violated, 0u);
}

// Partial operations are obligations of their own.
TEST(Symexec, PartialOperationsAreObligations) {
  lang::TypeEnv env{{"x", lang::Type::Integer}, {"q", lang::Type::Rational}, {"m", lang::Type::Natural}};
  auto assign = [&](const char* target, const char* value) {
    return lang::make_stmt(lang::Assign{target, lang::parse_expr_untyped(value)});
  };
  Goal div{env, {assign("q", "1 / x"), lang::make_stmt(lang::Assert{lang::make_bool(true), false})}};
  Goal mod{env, {assign("x", "x % m"), lang::make_stmt(lang::Assert{lang::make_bool(true), false})}};
  Goal nat{env, {assign("m", "m - 1"), lang::make_stmt(lang::Assert{lang::make_bool(true), false})}};
  for (const Goal* g : {&div, &mod, &nat}) {
    interp::State zero;
    zero.values = {{"x", interp::int_value(0)}, {"q", interp::rat_value(0)}, {"m", interp::int_value(0)}};
    auto verdicts = pinned_verdicts(*g, {zero});
    ASSERT_EQ(verdicts.size(), 1u);
    EXPECT_EQ(verdicts[0], "sat") << to_string(*g);
    EXPECT_EQ(interp::run_statements(g->stmts, g->env, zero).outcome, interp::RunOutcome::Violated);
  }
}
