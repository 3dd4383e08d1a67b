#include <sipinv/engine/engine.hpp>
#include <sipinv/lang/pretty.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <mutex>
#include <span>

namespace sipinv::engine {

using interp::State;
using lang::ExprPtr;
using solver::QueryKind;

std::string_view to_string(Characterization c) {
  switch (c) {
    case Characterization::TypeTautology:
      return "TypeTautology";
    case Characterization::Displaced:
      return "Displaced";
    case Characterization::DisplacedPot:
      return "DisplacedPot";
    case Characterization::NonInv:
      return "NonInv";
    case Characterization::Inductive:
      return "Inductive";
    case Characterization::Potential:
      return "Potential";
    case Characterization::Unknown:
      return "Unknown";
  }
  return "?";
}

int proposal_score(Characterization c) {
  switch (c) {
    case Characterization::Inductive:
      return 3;
    case Characterization::Potential:
      return 2;
    default:
      return 0;
  }
}

Invariant make_invariant(std::string text, ExprPtr expr) {
  std::string key = lang::to_string(*expr);
  return Invariant{std::move(text), std::move(expr), std::move(key)};
}

bool InvariantState::contains(const std::string& key) const {
  auto same = [&](const Invariant& i) { return i.key == key; };
  return std::any_of(inductive.begin(), inductive.end(), same) || std::any_of(potential.begin(), potential.end(), same);
}

const Invariant* InvariantState::find_potential(const std::string& key) const {
  for (const auto& i : potential)
    if (i.key == key) return &i;
  return nullptr;
}

std::vector<ExprPtr> InvariantState::inductive_exprs() const {
  std::vector<ExprPtr> out;
  for (const auto& i : inductive) out.push_back(i.expr);
  return out;
}

std::vector<ExprPtr> InvariantState::all_exprs() const {
  auto out = inductive_exprs();
  for (const auto& i : potential) out.push_back(i.expr);
  return out;
}

namespace {

std::mutex sink_mutex;

State loop_head(State s) {
  s.location = interp::Location::LoopHead;
  s.iteration = -1;
  return s;
}

bool holds_all(const std::vector<ExprPtr>& es, const State& st) {
  return std::all_of(es.begin(), es.end(), [&](const ExprPtr& e) { return interp::holds_or_false(*e, st); });
}

using PosKey = std::pair<int, int>;

/// Replays recorded cassign values by source position, in visit order. Works
/// across clones of the same statement.
interp::ChoiceProvider by_position(const std::vector<interp::CAssignChoice>& choices) {
  auto queues = std::make_shared<std::map<PosKey, std::deque<std::vector<interp::Value>>>>();
  for (const auto& c : choices) (*queues)[{c.pos.line, c.pos.column}].push_back(c.values);
  return [queues](const lang::Stmt& s) -> std::optional<std::vector<interp::Value>> {
    auto it = queues->find({s.pos.line, s.pos.column});
    if (it == queues->end() || it->second.empty()) return std::nullopt;
    auto v = std::move(it->second.front());
    it->second.pop_front();
    return v;
  };
}

State params_of(const lang::Program& p, const State& model) {
  State in;
  for (const auto& param : p.params) {
    auto it = model.values.find(param.name);
    in.values[param.name] = it != model.values.end() ? it->second : interp::default_value(param.type);
  }
  return in;
}

}  // namespace

Engine::Engine(const lang::Program& p, solver::Checker& checker, EngineConfig cfg, EventSink sink)
    : p_(p), checker_(checker), cfg_(cfg), sink_(std::move(sink)) {}

void Engine::emit(std::string type, std::string detail, std::string verdict) {
  if (!sink_) return;
  std::lock_guard lock(sink_mutex);
  sink_(Event{std::move(type), std::move(detail), std::move(verdict)});
}

solver::Verdict Engine::ask(const vcgen::Goal& g, QueryKind kind, const std::string& about) {
  solver::Verdict v;
  try {
    v = checker_.check(p_, g, kind);
  } catch (const solver::TransportError& err) {
    emit("error", std::string(solver::to_string(kind)) + " " + about, err.what());
    v = solver::Unknown{solver::UnknownReason::Resource, std::string("prover unavailable: ") + err.what()};
  }
  emit("query", std::string(solver::to_string(kind)) + " " + about, std::string(solver::verdict_name(v)));
  return v;
}

bool Engine::proved(const vcgen::Goal& g, QueryKind kind, const std::string& about) {
  return std::holds_alternative<solver::Proved>(ask(g, kind, about));
}

ProposalResult Engine::propose_loop_inv(const InvariantState& s, const Invariant& e) {
  if (s.contains(e.key)) throw DuplicateInvariant("'" + e.key + "' is already known");

  ProposalResult r;
  r.state = s;
  auto finish = [&](Characterization k) {
    r.kind = k;
    r.feedback.kind = k;
    emit("characterization", e.key, std::string(to_string(k)));
    return r;
  };

  // Closed expressions are settled without the prover.
  if (lang::free_variables(*e.expr).empty()) {
    try {
      if (interp::holds(*e.expr, State{})) return finish(Characterization::TypeTautology);
    } catch (const interp::RuntimeError&) {
    }
  }

  if (proved(vcgen::build_assertion(p_, {}, e.expr), QueryKind::Tautology, e.key)) {
    return finish(Characterization::TypeTautology);
  }
  const auto inductive = s.inductive_exprs();
  if (!inductive.empty() && proved(vcgen::build_assertion(p_, inductive, e.expr), QueryKind::Displaced, e.key)) {
    return finish(Characterization::Displaced);
  }
  if (displaced_pot_check(s, e.expr, cfg_.max_subset)) return finish(Characterization::DisplacedPot);

  auto init_goal = vcgen::build_upto_loop(p_, e.expr);
  auto init = ask(init_goal, QueryKind::Initiation, e.key);
  if (const auto* cex = std::get_if<solver::Counterexample>(&init)) {
    r.feedback.trace = trace_from_counterexample(init_goal, *cex, e.expr);
    return finish(Characterization::NonInv);
  }
  if (const auto* u = std::get_if<solver::Unknown>(&init)) {
    r.feedback.diagnostic = "initiation could not be decided (" + std::string(solver::to_string(u->reason)) +
                            "): " + u->detail;
    return finish(Characterization::Unknown);
  }

  auto loop_goal = vcgen::build_loop_unrolled(p_, e.expr, cfg_.unroll_bound);
  auto bounded = ask(loop_goal, QueryKind::Unrolled, e.key);
  if (const auto* cex = std::get_if<solver::Counterexample>(&bounded)) {
    r.feedback.trace = trace_from_counterexample(loop_goal, *cex, e.expr);
    return finish(Characterization::NonInv);
  }

  InvariantState next = s;
  next.potential.push_back(e);
  auto pr = promote(next);
  r.state = std::move(pr.state);
  r.feedback.removed = std::move(pr.removed);
  bool landed = false;
  for (auto& x : pr.promoted) {
    if (x.key == e.key) {
      landed = true;
    } else {
      r.feedback.promoted.push_back(std::move(x));
    }
  }
  return finish(landed ? Characterization::Inductive : Characterization::Potential);
}

std::vector<std::size_t> Engine::promotable_serial(const std::vector<ExprPtr>& inductive,
                                                   const std::vector<ExprPtr>& potential) {
  std::vector<bool> alive(potential.size(), true);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t j = 0; j < potential.size(); ++j) {
      if (!alive[j]) continue;
      auto hyps = inductive;
      for (std::size_t k = 0; k < potential.size(); ++k)
        if (alive[k]) hyps.push_back(potential[k]);
      auto g = vcgen::build_consecution(p_, hyps, potential[j]);
      if (!proved(g, QueryKind::Consecution, lang::to_string(*potential[j]))) {
        alive[j] = false;
        changed = true;
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < potential.size(); ++j)
    if (alive[j]) out.push_back(j);
  return out;
}

std::vector<std::size_t> Engine::promotable_parallel(const std::vector<ExprPtr>& inductive,
                                                     const std::vector<ExprPtr>& potential) {
  std::vector<std::size_t> alive(potential.size());
  for (std::size_t j = 0; j < alive.size(); ++j) alive[j] = j;
  while (!alive.empty()) {
    auto hyps = inductive;
    for (auto j : alive) hyps.push_back(potential[j]);
    std::vector<char> ok(alive.size(), 0);
    const int n = static_cast<int>(alive.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
      try {
        const auto& x = potential[alive[static_cast<std::size_t>(i)]];
        ok[static_cast<std::size_t>(i)] =
            proved(vcgen::build_consecution(p_, hyps, x), QueryKind::Consecution, lang::to_string(*x));
      } catch (...) {
        ok[static_cast<std::size_t>(i)] = 0;
      }
    }
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < alive.size(); ++i)
      if (ok[i]) survivors.push_back(alive[i]);
    if (survivors.size() == alive.size()) break;
    alive = std::move(survivors);
  }
  return alive;
}

PromoteResult Engine::promote(const InvariantState& s) {
  PromoteResult out;
  out.state = s;
  if (s.potential.empty()) return out;
  std::vector<ExprPtr> pexprs;
  for (const auto& x : s.potential) pexprs.push_back(x.expr);
  auto keep = cfg_.parallel_promote ? promotable_parallel(s.inductive_exprs(), pexprs)
                                    : promotable_serial(s.inductive_exprs(), pexprs);
  if (keep.empty()) return out;

  InvariantState next;
  next.inductive = s.inductive;
  for (std::size_t j = 0, k = 0; j < s.potential.size(); ++j) {
    if (k < keep.size() && keep[k] == j) {
      next.inductive.push_back(s.potential[j]);
      out.promoted.push_back(s.potential[j]);
      emit("promoted", s.potential[j].key);
      ++k;
    } else {
      next.potential.push_back(s.potential[j]);
    }
  }
  auto rd = rem_displaced(next);
  out.state = std::move(rd.state);
  out.removed = std::move(rd.removed);
  return out;
}

PromoteResult Engine::rem_displaced(const InvariantState& s) {
  PromoteResult out;
  out.state = s;
  auto& inv = out.state.inductive;
  for (bool any = true; any;) {
    any = false;
    for (std::size_t i = 0; i < inv.size();) {
      std::vector<ExprPtr> rest;
      for (std::size_t k = 0; k < inv.size(); ++k)
        if (k != i) rest.push_back(inv[k].expr);
      if (proved(vcgen::build_assertion(p_, rest, inv[i].expr), QueryKind::Displaced, inv[i].key)) {
        emit("removed", inv[i].key);
        out.removed.push_back(inv[i]);
        inv.erase(inv.begin() + static_cast<std::ptrdiff_t>(i));
        any = true;
      } else {
        ++i;
      }
    }
  }
  return out;
}

bool Engine::displaced_pot_check(const InvariantState& s, const ExprPtr& e, int max_subset) {
  const auto inductive = s.inductive_exprs();
  const std::size_t n = s.potential.size();
  const std::string about = lang::to_string(*e);
  std::vector<std::size_t> pick;
  // subsets in order of size, then lexicographically
  std::function<bool(std::size_t, std::size_t)> search = [&](std::size_t from, std::size_t size) -> bool {
    if (pick.size() == size) {
      std::vector<ExprPtr> parts;
      for (auto i : pick) parts.push_back(s.potential[i].expr);
      auto same = lang::make_binary(lang::BinaryOp::Eq, lang::conjoin(parts), e);
      return proved(vcgen::build_assertion(p_, inductive, same), QueryKind::DisplacedPot, about);
    }
    for (std::size_t i = from; i < n; ++i) {
      pick.push_back(i);
      bool hit = search(i + 1, size);
      pick.pop_back();
      if (hit) return true;
    }
    return false;
  };
  for (std::size_t size = 1; size <= std::min<std::size_t>(n, static_cast<std::size_t>(std::max(0, max_subset)));
       ++size) {
    if (search(0, size)) return true;
  }
  return false;
}

SolvedResult Engine::check_solved(const InvariantState& s) {
  SolvedResult out;
  auto v = ask(vcgen::build_exit_check(p_, s.inductive_exprs()), QueryKind::Exit, "guarantee");
  if (std::holds_alternative<solver::Proved>(v)) {
    out.solved = true;
  } else if (const auto* cex = std::get_if<solver::Counterexample>(&v)) {
    out.counterexample = loop_head(cex->model);
  } else {
    out.diagnostic = std::get<solver::Unknown>(v).detail;
  }
  return out;
}

Feedback Engine::gen_feedback(const InvariantState& s, const SolvedResult& solved) {
  Feedback f;
  if (solved.solved) {
    f.solved = true;
    return f;
  }
  auto v = ask(vcgen::build_exit_check(p_, s.all_exprs()), QueryKind::Feedback, "guarantee");
  if (const auto* cex = std::get_if<solver::Counterexample>(&v)) {
    f.rule_out = loop_head(cex->model);
    f.rule_out_covers_potential = true;
  } else if (solved.counterexample) {
    f.rule_out = solved.counterexample;
  } else {
    f.diagnostic = "Sorry, no useful feedback could be generated for the current invariants.";
  }
  return f;
}

WhyNotResult Engine::why_not_inductive(const InvariantState& s, const std::string& key) {
  WhyNotResult out;
  const Invariant* q = s.find_potential(key);
  if (!q) {
    out.error = WhyNotError::NotPotential;
    out.diagnostic = "'" + key + "' is not a potential invariant";
    return out;
  }
  const auto known = s.all_exprs();
  auto g = vcgen::build_consecution(p_, known, q->expr);
  auto v = ask(g, QueryKind::WhyNot, q->key);
  if (std::holds_alternative<solver::Proved>(v)) {
    out.error = WhyNotError::Promotable;
    out.diagnostic = "'" + q->key + "' is preserved by the loop under the known invariants";
    return out;
  }
  if (const auto* u = std::get_if<solver::Unknown>(&v)) {
    out.error = WhyNotError::Unknown;
    out.diagnostic = u->detail;
    return out;
  }
  const auto& cex = std::get<solver::Counterexample>(v);
  State before = loop_head(cex.model);
  interp::ExecOptions opts;
  opts.choices = solver::choices_for(g, cex);
  auto run = interp::exec_body(p_, before, opts);
  State after = loop_head(run.final_state);
  bool confirmed = holds_all(known, before) && interp::holds_or_false(*p_.test, before) &&
                   (run.outcome == interp::RunOutcome::Violated ||
                    (run.outcome == interp::RunOutcome::Held && !interp::holds_or_false(*q->expr, after)));
  if (!confirmed) {
    out.error = WhyNotError::Unknown;
    out.diagnostic = "the prover's state pair could not be confirmed by execution";
    return out;
  }
  out.pair = std::make_pair(std::move(before), std::move(after));
  out.choices = std::move(run.choices);
  return out;
}

std::optional<interp::Trace> Engine::trace_from_counterexample(const vcgen::Goal& g, const solver::Counterexample& cex,
                                                                const ExprPtr& e) {
  auto run = solver::replay(g, cex);
  interp::ExecOptions opts;
  opts.choices = by_position(run.choices);
  interp::Trace trace;
  try {
    trace = interp::exec_trace(p_, params_of(p_, cex.model), opts);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    if (!interp::holds_or_false(*e, trace.rows[k])) {
      if (k + 1 < trace.rows.size() || trace.post) {
        trace.rows.resize(k + 1);
        trace.post.reset();
        trace.guarantee_holds.reset();
        trace.output.clear();
        trace.outcome = interp::TraceOutcome::Truncated;
        trace.message = "stopped at the first loop-head state where '" + lang::to_string(*e) + "' is false";
      }
      return trace;
    }
  }
  if (trace.outcome == interp::TraceOutcome::RuntimeError || trace.outcome == interp::TraceOutcome::AssertionFailed) {
    return trace;
  }
  if (!run.loop_heads.empty()) {
    interp::Trace fallback;
    fallback.inputs = params_of(p_, cex.model);
    fallback.rows = run.loop_heads;
    fallback.outcome = interp::TraceOutcome::Truncated;
    fallback.message = "loop-head states of the bounded unrolling";
    return fallback;
  }
  return std::nullopt;
}

std::vector<std::string> audit_feedback(const lang::Program& p, const InvariantState& s, const ExprPtr& e,
                                        const Feedback& f) {
  std::vector<std::string> problems;
  if (f.kind == Characterization::NonInv && !f.trace) problems.push_back("NonInv without a trace");
  if (f.trace) {
    const auto& t = *f.trace;
    interp::ExecOptions opts;
    opts.choices = by_position(t.choices);
    interp::Trace again;
    try {
      again = interp::exec_trace(p, t.inputs, opts);
    } catch (const std::exception& err) {
      problems.push_back(std::string("trace inputs rejected: ") + err.what());
    }
    if (again.rows.size() < t.rows.size()) {
      problems.push_back("trace has more rows than a fresh run");
    } else {
      for (std::size_t k = 0; k < t.rows.size(); ++k) {
        if (!(again.rows[k] == t.rows[k])) problems.push_back("trace row " + std::to_string(k) + " differs on re-run");
      }
    }
    bool error_run = t.outcome == interp::TraceOutcome::RuntimeError || t.outcome == interp::TraceOutcome::AssertionFailed;
    if (e && !error_run) {
      if (t.rows.empty() || interp::holds_or_false(*e, t.rows.back())) {
        problems.push_back("last trace row does not falsify '" + lang::to_string(*e) + "'");
      }
    }
  }
  if (f.rule_out) {
    const State& st = *f.rule_out;
    auto known = f.rule_out_covers_potential ? s.all_exprs() : s.inductive_exprs();
    if (!holds_all(known, st)) problems.push_back("rule-out state violates a known invariant");
    if (interp::holds_or_false(*p.test, st)) problems.push_back("rule-out state satisfies the loop test");
    auto exit = vcgen::build_exit_check(p, {});
    std::span<const lang::StmtPtr> tail(exit.stmts);
    auto run = interp::run_statements(tail.subspan(1), exit.env, st);
    if (run.outcome != interp::RunOutcome::Violated) problems.push_back("rule-out state satisfies the guarantee");
  }
  if (f.state_pair) {
    const auto& [before, after] = *f.state_pair;
    if (!holds_all(s.all_exprs(), before)) problems.push_back("before-state violates a known invariant");
    if (!interp::holds_or_false(*p.test, before)) problems.push_back("before-state fails the loop test");
    interp::ExecOptions opts;
    opts.choices = by_position(f.pair_choices);
    auto run = interp::exec_body(p, before, opts);
    auto recomputed = run.final_state;
    recomputed.location = after.location;
    recomputed.iteration = after.iteration;
    if (!(recomputed == after)) problems.push_back("after-state differs from executing the body");
    if (e && run.outcome == interp::RunOutcome::Held && interp::holds_or_false(*e, after)) {
      problems.push_back("after-state satisfies '" + lang::to_string(*e) + "'");
    }
  }
  return problems;
}

}  // namespace sipinv::engine
