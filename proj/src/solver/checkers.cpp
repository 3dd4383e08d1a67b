#include <sipinv/solver/solver.hpp>

namespace sipinv::solver {

using interp::State;
using interp::Value;

std::string_view to_string(QueryKind k) {
  switch (k) {
    case QueryKind::Tautology:
      return "tautology";
    case QueryKind::Displaced:
      return "displaced";
    case QueryKind::DisplacedPot:
      return "displaced-potential";
    case QueryKind::Initiation:
      return "initiation";
    case QueryKind::Unrolled:
      return "unrolled";
    case QueryKind::Consecution:
      return "consecution";
    case QueryKind::Exit:
      return "exit";
    case QueryKind::Feedback:
      return "feedback";
    case QueryKind::WhyNot:
      return "why-not";
    case QueryKind::CAssign:
      return "cassign";
    case QueryKind::Other:
      return "other";
  }
  return "?";
}

Prover::Prover(SolverConfig cfg) : cfg_(std::move(cfg)), slots_(std::clamp(cfg_.pool_size, 1, 256)) {}

ProverStats Prover::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

Verdict Prover::check(const lang::Program& p, const vcgen::Goal& g, QueryKind) {
  vcgen::validate(g);
  std::string key = vcgen::symexec_to_vc(g).to_smtlib();
  {
    std::lock_guard lock(mu_);
    ++stats_.queries;
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++stats_.cache_hits;
      return it->second;
    }
  }
  slots_.acquire();
  Verdict v;
  try {
    v = gen_chk_vcs(p, g, cfg_);
  } catch (...) {
    slots_.release();
    throw;
  }
  slots_.release();

  std::lock_guard lock(mu_);
  if (std::holds_alternative<Proved>(v)) {
    ++stats_.proved;
  } else if (std::holds_alternative<Counterexample>(v)) {
    ++stats_.counterexamples;
  } else {
    ++stats_.unknown;
  }
  if (!std::holds_alternative<Unknown>(v)) cache_.emplace(std::move(key), v);
  return v;
}

RecordedVerdict record(const vcgen::Goal& g, const Verdict& v) {
  RecordedVerdict r;
  r.key = query_key(g);
  r.verdict = std::string(verdict_name(v));
  if (const auto* cex = std::get_if<Counterexample>(&v)) {
    for (const auto& [name, value] : cex->model.values) r.model[name] = interp::render(value);
    for (const auto& choice : cex->cassign_values) {
      std::vector<std::string> rendered;
      if (choice) {
        for (const auto& value : *choice) rendered.push_back(interp::render(value));
      }
      r.cassign.push_back(std::move(rendered));
    }
    r.detail = cex->origin;
  } else if (const auto* u = std::get_if<Unknown>(&v)) {
    r.detail = std::string(to_string(u->reason)) + ": " + u->detail;
  }
  return r;
}

Verdict RecordingChecker::check(const lang::Program& p, const vcgen::Goal& g, QueryKind kind) {
  Verdict v = inner_.check(p, g, kind);
  std::lock_guard lock(mu_);
  log_.emplace_back(kind, record(g, v));
  return v;
}

std::vector<std::pair<QueryKind, RecordedVerdict>> RecordingChecker::take() {
  std::lock_guard lock(mu_);
  return std::exchange(log_, {});
}

namespace {

std::optional<Counterexample> rebuild(const vcgen::Goal& g, const RecordedVerdict& r) {
  Counterexample cex;
  cex.origin = r.detail;
  for (const auto& [name, text] : r.model) {
    auto type = g.env.find(name);
    if (type == g.env.end()) return std::nullopt;
    auto v = interp::parse_value(text, type->second);
    if (!v) return std::nullopt;
    cex.model.values[name] = *v;
  }
  auto occ = vcgen::cassign_occurrences(g);
  if (r.cassign.size() > occ.size()) return std::nullopt;
  cex.cassign_values.resize(occ.size());
  for (std::size_t i = 0; i < r.cassign.size(); ++i) {
    if (r.cassign[i].empty()) continue;
    const auto& targets = std::get<lang::CAssign>(occ[i]->node).targets;
    if (targets.size() != r.cassign[i].size()) return std::nullopt;
    std::vector<Value> values;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      auto v = interp::parse_value(r.cassign[i][j], g.env.at(targets[j]));
      if (!v) return std::nullopt;
      values.push_back(*v);
    }
    cex.cassign_values[i] = std::move(values);
  }
  auto run = replay(g, cex);
  if (run.outcome != interp::RunOutcome::Violated) return std::nullopt;
  if (!run.loop_heads.empty()) {
    State head = run.loop_heads.back();
    std::erase_if(head.values, [&](const auto& kv) { return !r.model.count(kv.first); });
    cex.loop_head = std::move(head);
  }
  return cex;
}

UnknownReason parse_reason(const std::string& detail) {
  for (auto r : {UnknownReason::Timeout, UnknownReason::IncompleteTheory, UnknownReason::Resource}) {
    if (detail.starts_with(to_string(r))) return r;
  }
  return UnknownReason::IncompleteTheory;
}

}  // namespace

ReplayChecker::ReplayChecker(const std::vector<std::pair<QueryKind, RecordedVerdict>>& script, Checker* fallback)
    : fallback_(fallback) {
  for (const auto& [kind, r] : script) pending_[{kind, r.key}].push_back(r);
}

std::size_t ReplayChecker::remaining() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [_, list] : pending_) n += list.size();
  return n;
}

std::size_t ReplayChecker::mismatches() const {
  std::lock_guard lock(mu_);
  return mismatches_;
}

Verdict ReplayChecker::check(const lang::Program& p, const vcgen::Goal& g, QueryKind kind) {
  std::optional<RecordedVerdict> r;
  {
    std::lock_guard lock(mu_);
    auto it = pending_.find({kind, query_key(g)});
    if (it != pending_.end() && !it->second.empty()) {
      r = std::move(it->second.front());
      it->second.erase(it->second.begin());
    }
  }
  if (r) {
    if (r->verdict == "proved") return Proved{};
    if (r->verdict == "unknown") {
      auto colon = r->detail.find(": ");
      return Unknown{parse_reason(r->detail), colon == std::string::npos ? r->detail : r->detail.substr(colon + 2)};
    }
    if (auto cex = rebuild(g, *r)) return *cex;
  }
  {
    std::lock_guard lock(mu_);
    ++mismatches_;
  }
  if (fallback_) return fallback_->check(p, g, kind);
  return Unknown{UnknownReason::Resource, "no recorded verdict for this query"};
}

interp::ModelFinder make_model_finder(Checker& checker, const lang::Program& p) {
  return [&checker, &p](const std::vector<std::string>& targets, const lang::Expr& constraint, const State& st,
                        const lang::TypeEnv& env) -> std::variant<State, interp::SearchFailure> {
    std::map<std::string, lang::ExprPtr> fixed;
    for (const auto& [name, value] : st.values) {
      if (std::find(targets.begin(), targets.end(), name) == targets.end()) {
        fixed.emplace(name, interp::to_literal(value));
      }
    }
    auto phi = lang::substitute(std::make_shared<lang::Expr>(constraint), fixed);
    vcgen::Goal goal;
    for (const auto& t : targets) goal.env.emplace(t, env.at(t));
    goal.stmts.push_back(lang::make_stmt(lang::Assert{lang::make_unary(lang::UnaryOp::Not, phi), false}));
    try {
      Verdict v = checker.check(p, goal, QueryKind::CAssign);
      if (std::holds_alternative<Proved>(v)) return interp::SearchFailure::ProvedUnsatisfiable;
      if (const auto* cex = std::get_if<Counterexample>(&v)) {
        State out;
        for (const auto& t : targets) {
          auto it = cex->model.values.find(t);
          out.values[t] = it != cex->model.values.end() ? it->second : interp::default_value(env.at(t));
        }
        return out;
      }
    } catch (const TransportError&) {
    }
    return interp::SearchFailure::Exhausted;
  };
}

}  // namespace sipinv::solver
