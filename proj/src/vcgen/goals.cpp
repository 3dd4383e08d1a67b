#include <sipinv/lang/pretty.hpp>
#include <sipinv/vcgen/vcgen.hpp>

#include <sstream>
#include <stdexcept>

namespace sipinv::vcgen {

using namespace lang;

namespace {

bool contains_loop(const Stmt& s) {
  if (std::holds_alternative<While>(s.node)) return true;
  if (const auto* b = std::get_if<Block>(&s.node)) {
    for (const auto& c : b->stmts)
      if (contains_loop(*c)) return true;
  }
  if (const auto* i = std::get_if<If>(&s.node)) return contains_loop(*i->then_branch) || contains_loop(*i->else_branch);
  return false;
}

StmtPtr assume(ExprPtr e) { return make_stmt(Assume{std::move(e)}); }
StmtPtr assert_stmt(ExprPtr e) { return make_stmt(Assert{std::move(e), false}); }

std::vector<StmtPtr> entry_prefix(const Program& p) {
  std::vector<StmtPtr> out;
  if (p.pre) out.push_back(assume(p.pre));
  for (const auto& s : p.prelude) {
    if (!std::holds_alternative<VarDecl>(s->node)) out.push_back(s);
  }
  return out;
}

void collect_cassigns(const StmtPtr& s, std::vector<const Stmt*>& out) {
  if (std::holds_alternative<CAssign>(s->node)) {
    out.push_back(s.get());
  } else if (const auto* b = std::get_if<Block>(&s->node)) {
    for (const auto& c : b->stmts) collect_cassigns(c, out);
  } else if (const auto* i = std::get_if<If>(&s->node)) {
    collect_cassigns(i->then_branch, out);
    collect_cassigns(i->else_branch, out);
  }
}

}  // namespace

void validate(const Goal& g) {
  if (g.stmts.empty()) throw std::invalid_argument("goal has no statements");
  const auto* last = std::get_if<Assert>(&g.stmts.back()->node);
  if (!last) throw std::invalid_argument("goal must end with an assert");
  for (const auto& s : g.stmts) {
    if (contains_loop(*s)) throw std::invalid_argument("goal contains a loop");
  }
}

std::string to_string(const Goal& g) {
  std::ostringstream os;
  for (const auto& [name, type] : g.env) os << "var " << name << ": " << to_string(type) << ";\n";
  for (const auto& s : g.stmts) os << to_string(*s);
  return os.str();
}

Goal build_assertion(const Program& p, std::span<const ExprPtr> hyps, const ExprPtr& e) {
  Goal g{p.env, {}};
  if (!hyps.empty()) g.stmts.push_back(assume(conjoin({hyps.begin(), hyps.end()})));
  g.stmts.push_back(assert_stmt(e));
  return g;
}

Goal build_upto_loop(const Program& p, const ExprPtr& e) {
  Goal g{p.env, entry_prefix(p)};
  g.stmts.push_back(assert_stmt(e));
  return g;
}

Goal build_loop_unrolled(const Program& p, const ExprPtr& e, int k) {
  if (k < 1) throw std::invalid_argument("unroll bound must be at least 1");
  Goal g{p.env, entry_prefix(p)};
  g.stmts.push_back(make_stmt(LoopHeadMark{0}));
  for (int i = 1; i <= k; ++i) {
    const std::string gate = std::string(kGatePrefix) + std::to_string(i);
    g.env.emplace(gate, Type::Boolean);
    g.stmts.push_back(make_stmt(CAssign{{gate}, make_bool(true)}));
    StmtPtr body = clone_stmt(p.body);
    auto taken = make_block({body, make_stmt(LoopHeadMark{i})});
    g.stmts.push_back(make_stmt(If{make_binary(BinaryOp::And, make_var(gate), p.test), taken, make_block({})}));
  }
  g.stmts.push_back(assert_stmt(e));
  return g;
}

Goal build_consecution(const Program& p, std::span<const ExprPtr> hyps, const ExprPtr& x) {
  std::vector<ExprPtr> all(hyps.begin(), hyps.end());
  all.push_back(p.test);
  Goal g{p.env, {assume(conjoin(all)), p.body, assert_stmt(x)}};
  return g;
}

Goal build_exit_check(const Program& p, std::span<const ExprPtr> assumed) {
  std::vector<ExprPtr> all(assumed.begin(), assumed.end());
  all.push_back(make_unary(UnaryOp::Not, p.test));
  Goal g{p.env, {assume(conjoin(all))}};
  for (const auto& s : p.epilogue) g.stmts.push_back(s);
  g.stmts.push_back(assert_stmt(p.post));
  return g;
}

std::vector<const Stmt*> cassign_occurrences(const Goal& g) {
  std::vector<const Stmt*> out;
  for (const auto& s : g.stmts) collect_cassigns(s, out);
  return out;
}

}  // namespace sipinv::vcgen
