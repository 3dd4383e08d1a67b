#include <sipinv/interp/interp.hpp>
#include <sipinv/lang/pretty.hpp>

namespace sipinv::interp {

using namespace lang;

namespace {

Value numeric_result(const mpq_class& q, bool integral) {
  if (integral) return int_value(q.get_num());
  return rat_value(q);
}

int compare(const Value& a, const Value& b) {
  if (std::holds_alternative<mpz_class>(a) && std::holds_alternative<mpz_class>(b)) {
    return cmp(std::get<mpz_class>(a), std::get<mpz_class>(b));
  }
  return cmp(as_rational(a), as_rational(b));
}

[[noreturn]] void mismatch(const Expr& e) {
  throw RuntimeError(RuntimeErrorKind::TypeMismatch, e.pos, "ill-typed operands in '" + to_string(e) + "'");
}

}  // namespace

Value eval_expr(const Expr& e, const State& st) {
  return std::visit(
      [&](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BoolLit>) {
          return bool_value(n.value);
        } else if constexpr (std::is_same_v<T, IntLit>) {
          return int_value(n.value);
        } else if constexpr (std::is_same_v<T, RatLit>) {
          return rat_value(n.value);
        } else if constexpr (std::is_same_v<T, VarRef>) {
          auto it = st.values.find(n.name);
          if (it == st.values.end()) {
            throw RuntimeError(RuntimeErrorKind::UnboundVariable, e.pos, "no value for '" + n.name + "'");
          }
          return it->second;
        } else if constexpr (std::is_same_v<T, Unary>) {
          Value v = eval_expr(*n.operand, st);
          if (n.op == UnaryOp::Not) {
            if (is_numeric(v)) mismatch(e);
            return bool_value(!std::get<bool>(v));
          }
          if (const auto* z = std::get_if<mpz_class>(&v)) return int_value(-*z);
          if (const auto* q = std::get_if<mpq_class>(&v)) return rat_value(-*q);
          mismatch(e);
        } else {
          Value l = eval_expr(*n.lhs, st);
          Value r = eval_expr(*n.rhs, st);
          switch (n.op) {
            case BinaryOp::And:
            case BinaryOp::Or: {
              if (is_numeric(l) || is_numeric(r)) mismatch(e);
              bool a = std::get<bool>(l), b = std::get<bool>(r);
              return bool_value(n.op == BinaryOp::And ? (a && b) : (a || b));
            }
            case BinaryOp::Eq:
            case BinaryOp::Ne: {
              if (is_numeric(l) != is_numeric(r)) mismatch(e);
              bool eq = values_equal(l, r);
              return bool_value(n.op == BinaryOp::Eq ? eq : !eq);
            }
            default:
              break;
          }
          if (!is_numeric(l) || !is_numeric(r)) mismatch(e);
          const bool integral = std::holds_alternative<mpz_class>(l) && std::holds_alternative<mpz_class>(r);
          switch (n.op) {
            case BinaryOp::Add:
              return numeric_result(as_rational(l) + as_rational(r), integral);
            case BinaryOp::Sub:
              return numeric_result(as_rational(l) - as_rational(r), integral);
            case BinaryOp::Mul:
              return numeric_result(as_rational(l) * as_rational(r), integral);
            case BinaryOp::Div: {
              mpq_class d = as_rational(r);
              if (sgn(d) == 0) throw RuntimeError(RuntimeErrorKind::DivisionByZero, e.pos, "division by zero");
              return rat_value(as_rational(l) / d);
            }
            case BinaryOp::Mod: {
              if (!integral) mismatch(e);
              const auto& m = std::get<mpz_class>(r);
              if (sgn(m) <= 0) {
                throw RuntimeError(RuntimeErrorKind::NonPositiveModulus, e.pos,
                                   "modulus must be positive, got " + m.get_str());
              }
              mpz_class out;
              mpz_fdiv_r(out.get_mpz_t(), std::get<mpz_class>(l).get_mpz_t(), m.get_mpz_t());
              return int_value(out);
            }
            case BinaryOp::Lt:
              return bool_value(compare(l, r) < 0);
            case BinaryOp::Le:
              return bool_value(compare(l, r) <= 0);
            case BinaryOp::Gt:
              return bool_value(compare(l, r) > 0);
            case BinaryOp::Ge:
              return bool_value(compare(l, r) >= 0);
            default:
              mismatch(e);
          }
        }
      },
      e.node);
}

bool holds(const Expr& e, const State& st) {
  Value v = eval_expr(e, st);
  if (is_numeric(v)) mismatch(e);
  return std::get<bool>(v);
}

bool holds_or_false(const Expr& e, const State& st) {
  try {
    return holds(e, st);
  } catch (const RuntimeError&) {
    return false;
  }
}

State solve_cassign(const std::vector<std::string>& targets, const Expr& constraint, const State& st,
                    const TypeEnv& env, Rng& rng, const ModelFinder& finder, int attempts) {
  State candidate = st;
  for (int i = 0; i < attempts; ++i) {
    for (const auto& t : targets) candidate.values[t] = sample_value(env.at(t), rng);
    if (holds_or_false(constraint, candidate)) return candidate;
  }
  if (finder) {
    auto found = finder(targets, constraint, st, env);
    if (auto* s = std::get_if<State>(&found)) {
      candidate = st;
      for (const auto& t : targets) candidate.values[t] = s->at(t);
      if (holds_or_false(constraint, candidate)) return candidate;
      throw CAssignUnsatisfiable(false, "solver model does not satisfy '" + to_string(constraint) + "'");
    }
    if (std::get<SearchFailure>(found) == SearchFailure::ProvedUnsatisfiable) {
      throw CAssignUnsatisfiable(true, "no values satisfy '" + to_string(constraint) + "'");
    }
  }
  throw CAssignUnsatisfiable(false, "search exhausted for '" + to_string(constraint) + "'");
}

std::string_view to_string(TraceOutcome o) {
  switch (o) {
    case TraceOutcome::Completed:
      return "completed";
    case TraceOutcome::Truncated:
      return "truncated";
    case TraceOutcome::Infeasible:
      return "infeasible";
    case TraceOutcome::AssertionFailed:
      return "assertion-failed";
    case TraceOutcome::CAssignUnsatisfiable:
      return "cassign-unsatisfiable";
    case TraceOutcome::RuntimeError:
      return "runtime-error";
  }
  return "?";
}

namespace {

struct AssumeFailed {
  std::string message;
};
struct AssertFailed {
  std::string message;
};
struct CapReached {};

/// Shared statement executor. In goal mode prints are skipped and loops are
/// rejected.
class Executor {
 public:
  Executor(const TypeEnv& env, State st, const ExecOptions& opts, bool goal_mode)
      : env_(env), st_(std::move(st)), opts_(opts), rng_(opts.seed), goal_mode_(goal_mode) {}

  void exec(const Stmt& s) {
    std::visit([&](const auto& n) { step(s, n); }, s.node);
  }

  void exec_all(std::span<const StmtPtr> stmts) {
    for (const auto& s : stmts) exec(*s);
  }

  State& state() { return st_; }
  std::vector<State>& marks() { return marks_; }
  std::vector<CAssignChoice>& choices() { return choices_; }
  std::vector<std::string>& output() { return output_; }

 private:
  void store(const std::string& name, const Value& v, SourcePos pos) {
    auto stored = coerce(v, env_.at(name));
    if (!stored) {
      if (env_.at(name) == Type::Natural) {
        throw RuntimeError(RuntimeErrorKind::NaturalUnderflow, pos,
                           "negative value " + render(v) + " assigned to Natural '" + name + "'");
      }
      throw RuntimeError(RuntimeErrorKind::TypeMismatch, pos, "cannot store " + render(v) + " in '" + name + "'");
    }
    st_.values[name] = std::move(*stored);
  }

  void step(const Stmt&, const VarDecl& n) { st_.values[n.name] = default_value(n.type); }
  void step(const Stmt& s, const Assign& n) { store(n.target, eval_expr(*n.value, st_), s.pos); }
  void step(const Stmt&, const Block& n) { exec_all(n.stmts); }
  void step(const Stmt&, const If& n) { exec(holds(*n.cond, st_) ? *n.then_branch : *n.else_branch); }
  void step(const Stmt& s, const While&) {
    throw std::logic_error("loop at " + std::to_string(s.pos.line) + " reached the straight-line executor");
  }
  void step(const Stmt&, const Print& n) {
    if (goal_mode_) return;
    std::string line;
    for (std::size_t i = 0; i < n.args.size(); ++i) line += (i ? " " : "") + render(eval_expr(*n.args[i], st_));
    output_.push_back(std::move(line));
  }
  void step(const Stmt&, const Assume& n) {
    if (!holds(*n.cond, st_)) throw AssumeFailed{"assumption '" + to_string(*n.cond) + "' is false"};
  }
  void step(const Stmt& s, const Assert& n) {
    if (!holds(*n.cond, st_)) {
      throw AssertFailed{std::string(n.claim ? "claim" : "assertion") + " '" + to_string(*n.cond) + "' failed at line " +
                         std::to_string(s.pos.line)};
    }
  }
  void step(const Stmt& s, const CAssign& n) {
    if (opts_.choices) {
      if (auto given = opts_.choices(s); given && given->size() == n.targets.size()) {
        State candidate = st_;
        bool ok = true;
        for (std::size_t i = 0; i < n.targets.size(); ++i) {
          auto v = coerce((*given)[i], env_.at(n.targets[i]));
          if (!v) {
            ok = false;
            break;
          }
          candidate.values[n.targets[i]] = *v;
        }
        if (ok && holds_or_false(*n.constraint, candidate)) {
          st_ = std::move(candidate);
          record(s, n);
          return;
        }
      }
    }
    st_ = solve_cassign(n.targets, *n.constraint, st_, env_, rng_, opts_.finder, opts_.cassign_attempts);
    record(s, n);
  }
  void step(const Stmt&, const LoopHeadMark& n) {
    State snap = st_;
    snap.location = Location::LoopHead;
    snap.iteration = n.iteration;
    marks_.push_back(std::move(snap));
  }

  void record(const Stmt& s, const CAssign& n) {
    CAssignChoice c{&s, s.pos, {}};
    for (const auto& t : n.targets) c.values.push_back(st_.at(t));
    choices_.push_back(std::move(c));
  }

  const TypeEnv& env_;
  State st_;
  const ExecOptions& opts_;
  Rng rng_;
  bool goal_mode_;
  std::vector<State> marks_;
  std::vector<CAssignChoice> choices_;
  std::vector<std::string> output_;
};

State tagged(State s, Location loc, int iteration) {
  s.location = loc;
  s.iteration = iteration;
  return s;
}

State untagged(State s) { return tagged(std::move(s), Location::Unspecified, -1); }

}  // namespace

Trace exec_trace(const Program& p, const State& inputs, const ExecOptions& opts) {
  Trace trace;
  State start;
  for (const auto& param : p.params) {
    auto it = inputs.values.find(param.name);
    if (it == inputs.values.end()) throw InputError("missing input '" + param.name + "'");
    if (!conforms(it->second, param.type)) {
      throw InputError("input '" + param.name + "' = " + render(it->second) + " is not a " +
                       std::string(to_string(param.type)));
    }
    start.values[param.name] = it->second;
  }
  for (const auto& [name, _] : inputs.values) {
    if (!start.values.count(name)) throw InputError("'" + name + "' is not a parameter");
  }
  trace.inputs = start;
  for (const auto& [name, type] : p.env) start.values.try_emplace(name, default_value(type));

  if (p.pre) {
    bool ok = false;
    try {
      ok = holds(*p.pre, start);
    } catch (const RuntimeError& err) {
      throw PreconditionViolated(std::string("precondition could not be evaluated: ") + err.what());
    }
    if (!ok) throw PreconditionViolated("inputs violate the precondition '" + to_string(*p.pre) + "'");
  }

  Executor ex(p.env, std::move(start), opts, false);
  auto fail = [&](TraceOutcome o, std::string msg) {
    trace.outcome = o;
    trace.message = std::move(msg);
    trace.failing_state = untagged(ex.state());
  };
  try {
    ex.exec_all(p.prelude);
    for (int k = 0;; ++k) {
      trace.rows.push_back(tagged(ex.state(), Location::LoopHead, k));
      if (!holds(*p.test, ex.state())) break;
      if (k >= opts.iteration_cap) throw CapReached{};
      ex.exec(*p.body);
    }
    ex.exec_all(p.epilogue);
    trace.post = tagged(ex.state(), Location::PostLoop, -1);
    trace.guarantee_holds = holds(*p.post, ex.state());
  } catch (const CapReached&) {
    trace.outcome = TraceOutcome::Truncated;
    trace.message = "iteration cap of " + std::to_string(opts.iteration_cap) + " reached";
  } catch (const AssumeFailed& f) {
    fail(TraceOutcome::Infeasible, f.message);
  } catch (const AssertFailed& f) {
    fail(TraceOutcome::AssertionFailed, f.message);
  } catch (const CAssignUnsatisfiable& err) {
    fail(TraceOutcome::CAssignUnsatisfiable, err.what());
  } catch (const RuntimeError& err) {
    fail(TraceOutcome::RuntimeError, err.what());
  }
  trace.output = std::move(ex.output());
  trace.choices = std::move(ex.choices());
  return trace;
}

std::optional<State> sample_inputs(const Program& p, Rng& rng, int attempts) {
  for (int i = 0; i < attempts; ++i) {
    State s;
    for (const auto& param : p.params) s.values.emplace(param.name, sample_value(param.type, rng));
    if (!p.pre || holds_or_false(*p.pre, s)) return s;
  }
  return std::nullopt;
}

RunResult run_statements(std::span<const StmtPtr> stmts, const TypeEnv& env, State start, const ExecOptions& opts) {
  for (const auto& [name, type] : env) start.values.try_emplace(name, default_value(type));
  Executor ex(env, std::move(start), opts, true);
  RunResult result;
  try {
    ex.exec_all(stmts);
  } catch (const AssumeFailed& f) {
    result.outcome = RunOutcome::Infeasible;
    result.message = f.message;
  } catch (const CAssignUnsatisfiable& err) {
    result.outcome = RunOutcome::Infeasible;
    result.message = err.what();
  } catch (const AssertFailed& f) {
    result.outcome = RunOutcome::Violated;
    result.message = f.message;
  } catch (const RuntimeError& err) {
    result.outcome = RunOutcome::Violated;
    result.message = err.what();
  }
  result.final_state = untagged(ex.state());
  result.loop_heads = std::move(ex.marks());
  result.choices = std::move(ex.choices());
  return result;
}

RunResult exec_body(const Program& p, const State& before, const ExecOptions& opts) {
  const StmtPtr body[] = {p.body};
  return run_statements(body, p.env, untagged(before), opts);
}

}  // namespace sipinv::interp
