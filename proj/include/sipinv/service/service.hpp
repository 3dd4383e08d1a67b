#pragma once

#include <sipinv/engine/engine.hpp>
#include <sipinv/solver/solver.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace sipinv::service {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Levels

struct Level {
  std::string id;
  std::string title;
  std::string source;
  lang::Program program;
  interp::State starter_inputs;
  bool tutorial = false;
  std::optional<int> unroll_bound;
};

/// Parses and checks one level file's JSON. Throws std::invalid_argument or
/// lang::LangError.
Level parse_level(const json& j);

/// Every *.json file in `dir`, in file-name order.
std::vector<Level> load_levels(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Serialization

json to_json(const interp::Value& v);
json to_json(const interp::State& s);
json to_json(const interp::Trace& t);
json to_json(const engine::Invariant& i);
json to_json(const engine::Feedback& f);

/// Parameter inputs from {"name": "text"}; values may also be JSON numbers
/// or booleans. Throws interp::InputError.
interp::State inputs_from_json(const lang::Program& p, const json& j);

/// Typed state from {"name": "text"} over `env`; nullopt on any bad entry.
std::optional<interp::State> state_from_json(const lang::TypeEnv& env, const json& j);

json to_json(const solver::RecordedVerdict& r);
solver::RecordedVerdict recorded_from_json(const json& j);
json queries_to_json(const std::vector<std::pair<solver::QueryKind, solver::RecordedVerdict>>& qs);
std::vector<std::pair<solver::QueryKind, solver::RecordedVerdict>> queries_from_json(const json& j);
std::optional<solver::QueryKind> query_kind_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Service

struct ServiceConfig {
  solver::SolverConfig solver;
  std::filesystem::path levels_dir = "levels";
  /// Empty disables persistence.
  std::filesystem::path data_dir;
  /// Proposals waiting on one (session, level) beyond which requests get 429.
  int max_pending = 8;
  bool parallel_promote = false;
  /// Receives one structured line per request and engine event; null is
  /// silent.
  std::function<void(const json&)> log;
};

/// Reads SIPINV_PROVER, SIPINV_TIMEOUT, SIPINV_POOL, SIPINV_DATA,
/// SIPINV_LEVELS and SIPINV_MAX_PENDING over the defaults.
ServiceConfig config_from_env(ServiceConfig base = {});

/// Writes each line as compact JSON to stderr.
std::function<void(const json&)> stderr_log();

/// Wire name of a characterization: "inductive", "non_inv", ...
std::string kind_name(engine::Characterization c);

struct Reply {
  int status = 200;
  json body;
};

struct HistoryEntry {
  std::string text;
  std::string key;
  engine::Characterization kind;
  std::string timestamp;
};

struct RestoreReport {
  std::size_t events = 0;
  std::size_t sessions = 0;
  /// Replayed proposals whose outcome differed from the log.
  std::size_t divergent = 0;
  /// Recorded queries that were missing or did not replay.
  std::size_t query_mismatches = 0;
};

/// Score for one level's history: Inductive 3, Potential 2 (3 once promoted),
/// plus the solve bonus.
int level_score(const std::vector<HistoryEntry>& history, const std::set<std::string>& promoted, bool solved);

class Service {
 public:
  /// Uses `checker` when given, otherwise a Prover built from the config.
  Service(ServiceConfig cfg, std::vector<Level> levels, std::shared_ptr<solver::Checker> checker = nullptr);
  ~Service();

  Reply list_levels() const;
  Reply get_level(const std::string& id) const;
  Reply create_session();
  Reply get_state(const std::string& sid, const std::string& level);
  Reply propose(const std::string& sid, const std::string& level, const json& body);
  Reply trace(const std::string& sid, const std::string& level, const json& body);
  Reply why_not(const std::string& sid, const std::string& level, const json& body);

  /// Replays the event log from the data directory, using the recorded
  /// verdicts. Call before serving.
  RestoreReport restore();

  /// Registers the HTTP routes.
  void mount(httplib::Server& server);

  /// Current state of one (session, level), for tests and tools.
  std::optional<engine::InvariantState> snapshot(const std::string& sid, const std::string& level);

 private:
  struct Progress;
  struct Session;

  const Level* find_level(const std::string& id) const;
  std::shared_ptr<Session> find_session(const std::string& sid);
  std::shared_ptr<Progress> progress(Session& s, const Level& level, solver::Checker& checker, bool live);
  engine::EngineConfig engine_config(const Level& level) const;
  engine::EventSink sink(const std::string& sid, const std::string& level);
  int session_score(Session& s);
  json state_json(Session& s, const Level& level, Progress& pr);
  void persist(const json& event);
  void log(json line) const;

  ServiceConfig cfg_;
  std::vector<Level> levels_;
  std::shared_ptr<solver::Checker> checker_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex events_mu_;
  std::ofstream events_;
  mutable std::mutex log_mu_;
};

}  // namespace sipinv::service
