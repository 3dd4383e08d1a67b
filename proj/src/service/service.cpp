#include <sipinv/interp/interp.hpp>
#include <sipinv/lang/parser.hpp>
#include <sipinv/lang/pretty.hpp>
#include <sipinv/service/service.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <random>

namespace sipinv::service {

using engine::Characterization;

std::string kind_name(Characterization c) {
  switch (c) {
    case Characterization::TypeTautology:
      return "type_tautology";
    case Characterization::Displaced:
      return "displaced";
    case Characterization::DisplacedPot:
      return "displaced_pot";
    case Characterization::NonInv:
      return "non_inv";
    case Characterization::Inductive:
      return "inductive";
    case Characterization::Potential:
      return "potential";
    case Characterization::Unknown:
      return "unknown";
  }
  return "unknown";
}

namespace {

std::optional<Characterization> kind_from_name(const std::string& s) {
  for (auto c : {Characterization::TypeTautology, Characterization::Displaced, Characterization::DisplacedPot,
                 Characterization::NonInv, Characterization::Inductive, Characterization::Potential,
                 Characterization::Unknown}) {
    if (kind_name(c) == s) return c;
  }
  return std::nullopt;
}

std::string now_iso() {
  auto now = std::chrono::system_clock::now();
  auto t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string fresh_id() {
  static std::mutex mu;
  static std::random_device rd;
  std::lock_guard lock(mu);
  std::uniform_int_distribution<int> nibble(0, 15);
  std::string id;
  for (int i = 0; i < 32; ++i) id += "0123456789abcdef"[nibble(rd)];
  return id;
}

Reply error(int status, std::string message) { return {status, {{"error", std::move(message)}}}; }

json diagnostics_json(const lang::LangError& err) {
  json out = json::array();
  for (const auto& d : err.diagnostics()) {
    out.push_back({{"line", d.pos.line}, {"column", d.pos.column}, {"message", d.message}});
  }
  return out;
}

json invariants_json(const std::vector<engine::Invariant>& v) {
  json out = json::array();
  for (const auto& i : v) out.push_back(to_json(i));
  return out;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

int level_score(const std::vector<HistoryEntry>& history, const std::set<std::string>& promoted, bool solved) {
  int total = solved ? engine::kSolveBonus : 0;
  for (const auto& h : history) {
    if (h.kind == Characterization::Potential && promoted.count(h.key)) {
      total += engine::proposal_score(Characterization::Inductive);
    } else {
      total += engine::proposal_score(h.kind);
    }
  }
  return total;
}

ServiceConfig config_from_env(ServiceConfig base) {
  base.solver.command = env_or("SIPINV_PROVER", base.solver.command);
  base.solver.timeout_seconds = std::stod(env_or("SIPINV_TIMEOUT", std::to_string(base.solver.timeout_seconds)));
  base.solver.pool_size = std::stoi(env_or("SIPINV_POOL", std::to_string(base.solver.pool_size)));
  base.data_dir = env_or("SIPINV_DATA", base.data_dir.string());
  base.levels_dir = env_or("SIPINV_LEVELS", base.levels_dir.string());
  base.max_pending = std::stoi(env_or("SIPINV_MAX_PENDING", std::to_string(base.max_pending)));
  return base;
}

std::function<void(const json&)> stderr_log() {
  return [](const json& line) { std::cerr << line.dump() << '\n'; };
}

struct Service::Progress {
  std::mutex mu;
  std::atomic<int> pending{0};
  engine::InvariantState state;
  std::vector<HistoryEntry> history;
  std::set<std::string> promoted;
  bool solved = false;
  bool checked = false;
  std::optional<engine::Feedback> feedback;
  std::atomic<int> score{0};

  void rescore() { score = level_score(history, promoted, solved); }
};

struct Service::Session {
  std::string id;
  std::string created;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<Progress>> levels;
};

namespace {

/// Exit check and feedback for the current state; keeps `solved` sticky.
void refresh_solved(engine::Engine& eng, engine::InvariantState& state, bool& solved,
                    std::optional<engine::Feedback>& feedback) {
  auto sr = eng.check_solved(state);
  solved = solved || sr.solved;
  if (solved) {
    feedback.reset();
    return;
  }
  feedback = eng.gen_feedback(state, sr);
}

}  // namespace

Service::Service(ServiceConfig cfg, std::vector<Level> levels, std::shared_ptr<solver::Checker> checker)
    : cfg_(std::move(cfg)), levels_(std::move(levels)), checker_(std::move(checker)) {
  if (!checker_) checker_ = std::make_shared<solver::Prover>(cfg_.solver);
  if (!cfg_.data_dir.empty()) {
    std::filesystem::create_directories(cfg_.data_dir);
    events_.open(cfg_.data_dir / "events.jsonl", std::ios::app);
    if (!events_) throw std::runtime_error("cannot open event log in " + cfg_.data_dir.string());
  }
}

Service::~Service() = default;

void Service::log(json line) const {
  if (!cfg_.log) return;
  line["ts"] = now_iso();
  std::lock_guard lock(log_mu_);
  cfg_.log(line);
}

void Service::persist(const json& event) {
  if (!events_.is_open()) return;
  std::lock_guard lock(events_mu_);
  events_ << event.dump() << '\n';
  events_.flush();
}

const Level* Service::find_level(const std::string& id) const {
  for (const auto& l : levels_)
    if (l.id == id) return &l;
  return nullptr;
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& sid) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(sid);
  return it == sessions_.end() ? nullptr : it->second;
}

engine::EngineConfig Service::engine_config(const Level& level) const {
  engine::EngineConfig ec;
  ec.unroll_bound = level.unroll_bound.value_or(vcgen::kDefaultUnrollBound);
  ec.parallel_promote = cfg_.parallel_promote;
  return ec;
}

engine::EventSink Service::sink(const std::string& sid, const std::string& level) {
  if (!cfg_.log) return {};
  return [this, sid, level](const engine::Event& e) {
    log({{"event", e.type}, {"session", sid}, {"level", level}, {"detail", e.detail}, {"verdict", e.verdict}});
  };
}

std::shared_ptr<Service::Progress> Service::progress(Session& s, const Level& level, solver::Checker& checker,
                                                     bool live) {
  std::lock_guard lock(s.mu);
  auto& slot = s.levels[level.id];
  if (slot) return slot;
  slot = std::make_shared<Progress>();
  // A loop annotation in the source is the first proposal.
  if (const auto& ann = level.program.loop_annotation) {
    solver::RecordingChecker rec(checker);
    engine::Engine eng(level.program, rec, engine_config(level), sink(s.id, level.id));
    auto r = eng.propose_loop_inv(slot->state, engine::make_invariant(lang::to_string(*ann), ann));
    slot->state = r.state;
    if (live) {
      persist({{"type", "seed"}, {"session", s.id}, {"level", level.id}, {"queries", queries_to_json(rec.take())}});
    }
  }
  return slot;
}

int Service::session_score(Session& s) {
  std::lock_guard lock(s.mu);
  int total = 0;
  for (const auto& [_, pr] : s.levels) total += pr->score;
  return total;
}

json Service::state_json(Session& s, const Level& level, Progress& pr) {
  json history = json::array();
  for (const auto& h : pr.history) {
    history.push_back({{"text", h.text}, {"key", h.key}, {"kind", kind_name(h.kind)}, {"timestamp", h.timestamp}});
  }
  return {{"session", s.id},
          {"level", level.id},
          {"inductive", invariants_json(pr.state.inductive)},
          {"potential", invariants_json(pr.state.potential)},
          {"solved", pr.solved},
          {"history", history},
          {"feedback", pr.feedback ? to_json(*pr.feedback) : json(nullptr)},
          {"levelScore", pr.score.load()},
          {"score", session_score(s)}};
}

Reply Service::list_levels() const {
  json out = json::array();
  for (const auto& l : levels_) out.push_back({{"id", l.id}, {"title", l.title}, {"tutorial", l.tutorial}});
  return {200, out};
}

Reply Service::get_level(const std::string& id) const {
  const Level* l = find_level(id);
  if (!l) return error(404, "no level '" + id + "'");
  json params = json::array();
  for (const auto& p : l->program.params) {
    params.push_back({{"name", p.name}, {"type", std::string(lang::to_string(p.type))}});
  }
  json env = json::object();
  for (const auto& [name, t] : l->program.env) env[name] = std::string(lang::to_string(t));
  json out = {{"id", l->id},     {"title", l->title},   {"source", l->source}, {"starterInputs", to_json(l->starter_inputs)},
              {"tutorial", l->tutorial}, {"params", params}, {"env", env},
              {"guarantee", lang::to_string(*l->program.post)}};
  out["unrollBound"] = l->unroll_bound ? json(*l->unroll_bound) : json(nullptr);
  return {200, out};
}

Reply Service::create_session() {
  auto s = std::make_shared<Session>();
  s->id = fresh_id();
  s->created = now_iso();
  {
    std::lock_guard lock(sessions_mu_);
    sessions_[s->id] = s;
  }
  persist({{"type", "session"}, {"session", s->id}, {"ts", s->created}});
  log({{"event", "session"}, {"session", s->id}});
  return {201, {{"session", s->id}}};
}

Reply Service::get_state(const std::string& sid, const std::string& level_id) {
  const Level* level = find_level(level_id);
  if (!level) return error(404, "no level '" + level_id + "'");
  auto s = find_session(sid);
  if (!s) return error(404, "no session '" + sid + "'");
  auto pr = progress(*s, *level, *checker_, true);
  std::lock_guard lock(pr->mu);
  if (!pr->checked) {
    solver::RecordingChecker rec(*checker_);
    engine::Engine eng(level->program, rec, engine_config(*level), sink(sid, level_id));
    refresh_solved(eng, pr->state, pr->solved, pr->feedback);
    pr->checked = true;
    pr->rescore();
    persist({{"type", "check"}, {"session", sid}, {"level", level_id}, {"queries", queries_to_json(rec.take())}});
  }
  return {200, state_json(*s, *level, *pr)};
}

Reply Service::propose(const std::string& sid, const std::string& level_id, const json& body) {
  const Level* level = find_level(level_id);
  if (!level) return error(404, "no level '" + level_id + "'");
  auto s = find_session(sid);
  if (!s) return error(404, "no session '" + sid + "'");
  if (!body.is_object() || !body.contains("expr") || !body.at("expr").is_string()) {
    return error(400, "body must be {\"expr\": string}");
  }
  const std::string text = body.at("expr").get<std::string>();
  lang::ExprPtr e;
  try {
    e = lang::parse_expr(text, level->program.env);
  } catch (const lang::LangError& err) {
    Reply r = error(400, err.what());
    r.body["diagnostics"] = diagnostics_json(err);
    return r;
  }
  auto inv = engine::make_invariant(text, e);
  auto pr = progress(*s, *level, *checker_, true);

  if (pr->pending.fetch_add(1) >= cfg_.max_pending) {
    pr->pending.fetch_sub(1);
    return error(429, "too many pending proposals for this level");
  }
  struct Release {
    std::atomic<int>& n;
    ~Release() { n.fetch_sub(1); }
  } release{pr->pending};

  std::lock_guard lock(pr->mu);
  if (pr->state.contains(inv.key)) return error(409, "'" + inv.key + "' was already proposed");

  const int before = pr->score;
  solver::RecordingChecker rec(*checker_);
  engine::Engine eng(level->program, rec, engine_config(*level), sink(sid, level_id));
  const std::string ts = now_iso();
  auto r = eng.propose_loop_inv(pr->state, inv);
  pr->state = r.state;
  for (const auto& x : r.feedback.promoted) pr->promoted.insert(x.key);
  pr->history.push_back({text, inv.key, r.kind, ts});
  engine::Feedback fb = r.feedback;
  if (r.kind == Characterization::Inductive || r.kind == Characterization::Potential) {
    std::optional<engine::Feedback> exit_fb;
    refresh_solved(eng, pr->state, pr->solved, exit_fb);
    pr->feedback = exit_fb;
    pr->checked = true;
    if (exit_fb) {
      fb.rule_out = exit_fb->rule_out;
      fb.rule_out_covers_potential = exit_fb->rule_out_covers_potential;
      if (fb.diagnostic.empty()) fb.diagnostic = exit_fb->diagnostic;
    }
  }
  fb.solved = pr->solved;
  pr->rescore();
  persist({{"type", "propose"},
           {"session", sid},
           {"level", level_id},
           {"expr", text},
           {"kind", kind_name(r.kind)},
           {"ts", ts},
           {"queries", queries_to_json(rec.take())}});
  log({{"event", "proposal"}, {"session", sid}, {"level", level_id}, {"expr", text}, {"kind", kind_name(r.kind)}});

  return {200,
          {{"kind", kind_name(r.kind)},
           {"key", inv.key},
           {"inductive", invariants_json(pr->state.inductive)},
           {"potential", invariants_json(pr->state.potential)},
           {"feedback", to_json(fb)},
           {"solved", pr->solved},
           {"scoreDelta", pr->score - before},
           {"levelScore", pr->score.load()},
           {"score", session_score(*s)}}};
}

Reply Service::trace(const std::string& sid, const std::string& level_id, const json& body) {
  const Level* level = find_level(level_id);
  if (!level) return error(404, "no level '" + level_id + "'");
  if (!find_session(sid)) return error(404, "no session '" + sid + "'");
  if (!body.is_object() || !body.contains("inputs")) return error(400, "body must be {\"inputs\": {...}}");
  interp::Trace t;
  try {
    auto inputs = inputs_from_json(level->program, body.at("inputs"));
    interp::ExecOptions opts;
    opts.finder = solver::make_model_finder(*checker_, level->program);
    t = interp::exec_trace(level->program, inputs, opts);
  } catch (const interp::InputError& err) {
    return error(400, err.what());
  } catch (const interp::PreconditionViolated& err) {
    return error(422, err.what());
  }
  if (t.outcome == interp::TraceOutcome::Truncated) {
    Reply r = error(422, t.message.empty() ? "iteration cap reached" : t.message);
    r.body["trace"] = to_json(t);
    return r;
  }
  return {200, to_json(t)};
}

Reply Service::why_not(const std::string& sid, const std::string& level_id, const json& body) {
  const Level* level = find_level(level_id);
  if (!level) return error(404, "no level '" + level_id + "'");
  auto s = find_session(sid);
  if (!s) return error(404, "no session '" + sid + "'");
  if (!body.is_object() || !body.contains("expr") || !body.at("expr").is_string()) {
    return error(400, "body must be {\"expr\": string}");
  }
  lang::ExprPtr e;
  try {
    e = lang::parse_expr(body.at("expr").get<std::string>(), level->program.env);
  } catch (const lang::LangError& err) {
    Reply r = error(400, err.what());
    r.body["diagnostics"] = diagnostics_json(err);
    return r;
  }
  auto pr = progress(*s, *level, *checker_, true);
  std::lock_guard lock(pr->mu);
  engine::Engine eng(level->program, *checker_, engine_config(*level), sink(sid, level_id));
  auto w = eng.why_not_inductive(pr->state, lang::to_string(*e));
  if (w.error) {
    switch (*w.error) {
      case engine::WhyNotError::NotPotential:
        return error(404, w.diagnostic);
      case engine::WhyNotError::Promotable:
        return error(409, w.diagnostic);
      case engine::WhyNotError::Unknown:
        return error(503, w.diagnostic);
    }
  }
  return {200, {{"before", to_json(w.pair->first)}, {"after", to_json(w.pair->second)}}};
}

std::optional<engine::InvariantState> Service::snapshot(const std::string& sid, const std::string& level_id) {
  auto s = find_session(sid);
  if (!s) return std::nullopt;
  std::shared_ptr<Progress> pr;
  {
    std::lock_guard lock(s->mu);
    auto it = s->levels.find(level_id);
    if (it == s->levels.end()) return engine::InvariantState{};
    pr = it->second;
  }
  std::lock_guard lock(pr->mu);
  return pr->state;
}

RestoreReport Service::restore() {
  RestoreReport report;
  if (cfg_.data_dir.empty()) return report;
  std::ifstream in(cfg_.data_dir / "events.jsonl");
  if (!in) return report;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json ev = json::parse(line, nullptr, false);
    if (ev.is_discarded()) {
      ++report.divergent;
      continue;
    }
    ++report.events;
    const std::string type = ev.value("type", "");
    const std::string sid = ev.value("session", "");
    if (type == "session") {
      auto s = std::make_shared<Session>();
      s->id = sid;
      s->created = ev.value("ts", "");
      std::lock_guard lock(sessions_mu_);
      sessions_[sid] = s;
      ++report.sessions;
      continue;
    }
    auto s = find_session(sid);
    const Level* level = find_level(ev.value("level", ""));
    if (!s || !level) {
      ++report.divergent;
      continue;
    }
    solver::ReplayChecker replay(queries_from_json(ev.value("queries", json::array())));
    engine::Engine eng(level->program, replay, engine_config(*level));
    auto pr = progress(*s, *level, replay, false);
    std::lock_guard lock(pr->mu);
    if (type == "propose") {
      const std::string text = ev.value("expr", "");
      auto inv = engine::make_invariant(text, lang::parse_expr(text, level->program.env));
      if (pr->state.contains(inv.key)) {
        ++report.divergent;
        continue;
      }
      auto r = eng.propose_loop_inv(pr->state, inv);
      pr->state = r.state;
      for (const auto& x : r.feedback.promoted) pr->promoted.insert(x.key);
      pr->history.push_back({text, inv.key, r.kind, ev.value("ts", "")});
      if (r.kind == Characterization::Inductive || r.kind == Characterization::Potential) {
        refresh_solved(eng, pr->state, pr->solved, pr->feedback);
        pr->checked = true;
      }
      if (kind_from_name(ev.value("kind", "")) != r.kind) ++report.divergent;
    } else if (type == "check") {
      refresh_solved(eng, pr->state, pr->solved, pr->feedback);
      pr->checked = true;
    }
    pr->rescore();
    report.query_mismatches += replay.mismatches() + replay.remaining();
  }
  log({{"event", "restore"},
       {"events", report.events},
       {"sessions", report.sessions},
       {"divergent", report.divergent},
       {"queryMismatches", report.query_mismatches}});
  return report;
}

}  // namespace sipinv::service
