#include <sipinv/solver/solver.hpp>

#include <atomic>
#include <limits>
#include <unordered_map>

namespace sipinv::solver {

using interp::State;
using interp::Value;
using lang::Type;

std::string_view to_string(UnknownReason r) {
  switch (r) {
    case UnknownReason::Timeout:
      return "timeout";
    case UnknownReason::IncompleteTheory:
      return "incomplete-theory";
    case UnknownReason::Resource:
      return "resource";
  }
  return "?";
}

std::string_view verdict_name(const Verdict& v) {
  if (std::holds_alternative<Proved>(v)) return "proved";
  if (std::holds_alternative<Counterexample>(v)) return "counterexample";
  return "unknown";
}

namespace {

std::unordered_map<const lang::Stmt*, std::size_t> occurrence_index(const vcgen::Goal& g) {
  std::unordered_map<const lang::Stmt*, std::size_t> idx;
  auto occ = vcgen::cassign_occurrences(g);
  for (std::size_t i = 0; i < occ.size(); ++i) idx.emplace(occ[i], i);
  return idx;
}

std::optional<Value> model_value(const SExpr& term, Type t) {
  if (t == Type::Boolean) {
    if (term.is_list) return std::nullopt;
    if (term.atom == "true") return interp::bool_value(true);
    if (term.atom == "false") return interp::bool_value(false);
    return std::nullopt;
  }
  auto q = model_number(term);
  if (!q) return std::nullopt;
  return interp::coerce(interp::rat_value(*q), t);
}

/// Start state and cassign values read off a solver model; nullopt when some
/// value cannot be represented.
std::optional<Counterexample> counterexample_from_model(const vcgen::Goal& g, const vcgen::Formula& f,
                                                        const std::map<std::string, SExpr>& model) {
  Counterexample cex;
  cex.origin = "smt";
  for (const auto& [name, type] : g.env) {
    auto c = f.inputs.find(name);
    if (c == f.inputs.end()) {
      cex.model.values[name] = interp::default_value(type);
      continue;
    }
    auto term = model.find(c->second);
    if (term == model.end()) {
      cex.model.values[name] = interp::default_value(type);
      continue;
    }
    auto v = model_value(term->second, type);
    if (!v) return std::nullopt;
    cex.model.values[name] = *v;
  }
  auto occ = vcgen::cassign_occurrences(g);
  cex.cassign_values.resize(occ.size());
  for (std::size_t i = 0; i < occ.size() && i < f.cassign_names.size(); ++i) {
    const auto& targets = std::get<lang::CAssign>(occ[i]->node).targets;
    std::vector<Value> values;
    for (std::size_t j = 0; j < targets.size() && j < f.cassign_names[i].size(); ++j) {
      Type t = g.env.at(targets[j]);
      auto term = model.find(f.cassign_names[i][j]);
      if (term == model.end()) {
        values.push_back(interp::default_value(t));
        continue;
      }
      auto v = model_value(term->second, t);
      if (!v) return std::nullopt;
      values.push_back(*v);
    }
    cex.cassign_values[i] = std::move(values);
  }
  return cex;
}

interp::ExecOptions sample_options(std::uint64_t seed, std::size_t index, interp::State& start,
                                   const vcgen::Goal& g) {
  auto rng = interp::stream_rng(seed, index);
  start = interp::sample_state(g.env, rng);
  interp::ExecOptions opts;
  opts.seed = rng();
  opts.cassign_attempts = 200;
  return opts;
}

/// Runs sample `index`; returns the counterexample when it violates the goal.
std::optional<Counterexample> try_sample(const vcgen::Goal& g, std::uint64_t seed, std::size_t index,
                                         const std::unordered_map<const lang::Stmt*, std::size_t>& occ) {
  State start;
  auto opts = sample_options(seed, index, start, g);
  auto run = interp::run_statements(g.stmts, g.env, start, opts);
  if (run.outcome != interp::RunOutcome::Violated) return std::nullopt;
  Counterexample cex;
  cex.origin = "fuzz";
  cex.model = std::move(start);
  cex.cassign_values.resize(occ.size());
  for (const auto& c : run.choices) {
    auto it = occ.find(c.stmt);
    if (it != occ.end()) cex.cassign_values[it->second] = c.values;
  }
  if (!run.loop_heads.empty()) cex.loop_head = run.loop_heads.back();
  return cex;
}

UnknownReason classify(const std::string& reason, bool killed) {
  if (killed) return UnknownReason::Timeout;
  if (reason.find("timeout") != std::string::npos || reason.find("canceled") != std::string::npos) {
    return UnknownReason::Timeout;
  }
  if (reason.find("memout") != std::string::npos || reason.find("resource") != std::string::npos) {
    return UnknownReason::Resource;
  }
  return UnknownReason::IncompleteTheory;
}

std::string reason_unknown(std::string_view output) {
  try {
    for (const auto& item : parse_sexprs(output)) {
      if (item.is_list && item.list.size() == 2 && !item.list[0].is_list && item.list[0].atom == ":reason-unknown") {
        return item.list[1].atom;
      }
    }
  } catch (const TransportError&) {
  }
  return {};
}

}  // namespace

interp::ChoiceProvider choices_for(const vcgen::Goal& g, const Counterexample& cex) {
  return [occ = occurrence_index(g),
          values = cex.cassign_values](const lang::Stmt& s) -> std::optional<std::vector<Value>> {
    auto it = occ.find(&s);
    if (it == occ.end() || it->second >= values.size()) return std::nullopt;
    return values[it->second];
  };
}

std::uint64_t query_key(const vcgen::Goal& g) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : vcgen::symexec_to_vc(g).to_smtlib()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

interp::RunResult replay(const vcgen::Goal& g, const Counterexample& cex) {
  interp::ExecOptions opts;
  opts.choices = choices_for(g, cex);
  State start;
  for (const auto& [name, v] : cex.model.values) {
    if (g.env.count(name)) start.values[name] = v;
  }
  return interp::run_statements(g.stmts, g.env, std::move(start), opts);
}

std::optional<Counterexample> fuzz_counterexample_serial(const vcgen::Goal& g, int samples, std::uint64_t seed) {
  auto occ = occurrence_index(g);
  for (int i = 0; i < samples; ++i) {
    if (auto cex = try_sample(g, seed, static_cast<std::size_t>(i), occ)) return cex;
  }
  return std::nullopt;
}

std::optional<Counterexample> fuzz_counterexample(const vcgen::Goal& g, int samples, std::uint64_t seed) {
  auto occ = occurrence_index(g);
  std::atomic<int> best{std::numeric_limits<int>::max()};
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < samples; ++i) {
    if (i >= best.load(std::memory_order_relaxed)) continue;
    State start;
    auto opts = sample_options(seed, static_cast<std::size_t>(i), start, g);
    auto run = interp::run_statements(g.stmts, g.env, std::move(start), opts);
    if (run.outcome == interp::RunOutcome::Violated) {
      int cur = best.load(std::memory_order_relaxed);
      while (i < cur && !best.compare_exchange_weak(cur, i, std::memory_order_relaxed)) {
      }
    }
  }
  int found = best.load();
  if (found == std::numeric_limits<int>::max()) return std::nullopt;
  return try_sample(g, seed, static_cast<std::size_t>(found), occ);
}

Verdict check_goal(const vcgen::Goal& g, const SolverConfig& cfg) {
  vcgen::validate(g);
  auto f = vcgen::symexec_to_vc(g);
  std::string script = f.to_smtlib(cfg.timeout_seconds);
  script += "(get-info :reason-unknown)\n";
  const auto argv = split_command(cfg.command);
  const auto limit = std::chrono::milliseconds(static_cast<long long>(cfg.timeout_seconds * 1000.0) + 2000);

  Response resp;
  ProcessResult proc;
  for (int attempt = 0;; ++attempt) {
    try {
      proc = run_process(argv, script, limit);
      if (proc.killed) break;
      resp = parse_response(proc.out);
      break;
    } catch (const TransportError& err) {
      if (attempt >= 1) throw;
    }
  }

  auto fuzz = [&]() -> std::optional<Counterexample> {
    if (cfg.fuzz_samples <= 0) return std::nullopt;
    return cfg.parallel_fuzz ? fuzz_counterexample(g, cfg.fuzz_samples, cfg.seed)
                             : fuzz_counterexample_serial(g, cfg.fuzz_samples, cfg.seed);
  };

  if (!proc.killed && resp.status == Response::Status::Unsat) return Proved{};
  if (!proc.killed && resp.status == Response::Status::Sat) {
    if (auto cex = counterexample_from_model(g, f, resp.model)) {
      auto run = replay(g, *cex);
      if (run.outcome == interp::RunOutcome::Violated) {
        if (!run.loop_heads.empty()) cex->loop_head = run.loop_heads.back();
        return *cex;
      }
    }
    if (auto cex = fuzz()) return *cex;
    return Unknown{UnknownReason::IncompleteTheory, "prover model could not be confirmed by execution"};
  }
  if (auto cex = fuzz()) return *cex;
  std::string why = proc.killed ? std::string("prover exceeded the time limit") : reason_unknown(proc.out);
  return Unknown{classify(why, proc.killed), why.empty() ? "prover returned unknown" : why};
}

Verdict gen_chk_vcs(const lang::Program& p, const vcgen::Goal& g, const SolverConfig& cfg) {
  Verdict v = check_goal(g, cfg);
  if (auto* cex = std::get_if<Counterexample>(&v)) {
    std::erase_if(cex->model.values, [&](const auto& kv) { return !p.env.count(kv.first); });
    if (cex->loop_head) {
      std::erase_if(cex->loop_head->values, [&](const auto& kv) { return !p.env.count(kv.first); });
    }
  }
  return v;
}

}  // namespace sipinv::solver
