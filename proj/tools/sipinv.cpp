// sipinv: batch verifier, enumeration agent and service entry point.

#include <sipinv/engine/engine.hpp>
#include <sipinv/lang/parser.hpp>
#include <sipinv/lang/pretty.hpp>
#include <sipinv/service/service.hpp>

#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

using namespace sipinv;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Program source from a .sip file or a level JSON file.
std::string program_source(const std::string& path) {
  std::string text = read_file(path);
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object() && j.contains("source")) return j.at("source").get<std::string>();
  return text;
}

struct Line {
  int number;
  std::string text;
};

std::vector<Line> invariant_lines(const std::string& path) {
  std::vector<Line> out;
  std::istringstream in(read_file(path));
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    out.push_back({n, line.substr(b, e - b + 1)});
  }
  return out;
}

json keys_json(const std::vector<engine::Invariant>& v) {
  json out = json::array();
  for (const auto& i : v) out.push_back(i.key);
  return out;
}

int run_verify(const std::string& program_path, const std::string& inv_path, int unroll, double timeout,
               bool as_json) {
  lang::Program p;
  std::vector<std::pair<Line, engine::Invariant>> invs;
  try {
    p = lang::load_program(program_source(program_path));
    for (const auto& line : invariant_lines(inv_path)) {
      try {
        invs.emplace_back(line, engine::make_invariant(line.text, lang::parse_expr(line.text, p.env)));
      } catch (const lang::LangError& err) {
        std::cerr << inv_path << ":" << line.number << ": " << err.what() << "\n";
        return 2;
      }
    }
  } catch (const lang::LangError& err) {
    std::cerr << program_path << ": " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << err.what() << "\n";
    return 2;
  }

  solver::SolverConfig cfg;
  cfg.timeout_seconds = timeout;
  solver::Prover prover(cfg);
  engine::Engine eng(p, prover, engine::EngineConfig{.unroll_bound = unroll});
  engine::InvariantState state;
  json results = json::array();
  for (const auto& [line, inv] : invs) {
    std::string kind;
    std::string note;
    try {
      auto r = eng.propose_loop_inv(state, inv);
      state = r.state;
      kind = service::kind_name(r.kind);
      note = r.feedback.diagnostic;
    } catch (const engine::DuplicateInvariant&) {
      kind = "duplicate";
    }
    results.push_back({{"line", line.number}, {"expr", line.text}, {"kind", kind}, {"note", note}});
    if (!as_json) {
      std::cout << line.number << "\t" << kind << "\t" << line.text << (note.empty() ? "" : "\t(" + note + ")") << "\n";
    }
  }
  auto solved = eng.check_solved(state);
  if (as_json) {
    json out = {{"results", results},
                {"inductive", keys_json(state.inductive)},
                {"potential", keys_json(state.potential)},
                {"solved", solved.solved}};
    if (solved.counterexample) out["counterexample"] = service::to_json(*solved.counterexample);
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "inductive:";
    for (const auto& i : state.inductive) std::cout << " [" << i.key << "]";
    std::cout << "\npotential:";
    for (const auto& i : state.potential) std::cout << " [" << i.key << "]";
    std::cout << "\n" << (solved.solved ? "solved" : "unsolved") << "\n";
  }
  return solved.solved ? 0 : 1;
}

// ---------------------------------------------------------------------------
// agent

class Api {
 public:
  explicit Api(const std::string& url) : client_(url) {
    client_.set_connection_timeout(5);
    client_.set_read_timeout(600);
  }

  /// Status and body; retries transport failures and 5xx with backoff.
  std::pair<int, json> call(const std::string& method, const std::string& path, const json& body = nullptr) {
    auto delay = std::chrono::milliseconds(200);
    for (int attempt = 0;; ++attempt) {
      httplib::Result res = method == "GET" ? client_.Get(path) : client_.Post(path, body.dump(), "application/json");
      bool retry = !res || (res->status >= 500 && res->status != 503);
      if (!retry) {
        json j = json::parse(res->body, nullptr, false);
        return {res->status, j.is_discarded() ? json(nullptr) : j};
      }
      if (attempt >= 5) {
        throw std::runtime_error(method + " " + path + " failed: " +
                                 (res ? "status " + std::to_string(res->status) : httplib::to_string(res.error())));
      }
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }

 private:
  httplib::Client client_;
};

std::optional<lang::Type> type_from_string(const std::string& s) {
  for (auto t : {lang::Type::Boolean, lang::Type::Natural, lang::Type::Integer, lang::Type::Rational}) {
    if (lang::to_string(t) == s) return t;
  }
  return std::nullopt;
}

/// Candidate texts from the enabled template families over `vars`.
std::vector<std::string> candidates(const std::vector<std::string>& vars, const std::set<std::string>& families) {
  std::vector<std::string> out;
  const char* ops[] = {">=", "<=", "="};
  if (families.count("const")) {
    for (const auto& v : vars)
      for (const char* op : ops)
        for (int c = -4; c <= 4; ++c) out.push_back(v + " " + op + " " + std::to_string(c));
  }
  if (families.count("pair")) {
    for (const auto& v : vars)
      for (const auto& w : vars)
        if (v < w)
          for (const char* op : ops) out.push_back(v + " " + op + " " + w);
  }
  if (families.count("linear")) {
    for (const auto& v : vars)
      for (const auto& w : vars) {
        if (v == w) continue;
        for (int a = -4; a <= 4; ++a) {
          if (a == 0) continue;
          for (int b = -4; b <= 4; ++b) {
            if (a == 1 && b == 0) continue;
            out.push_back(v + " = " + w + "*" + std::to_string(a) + " + " + std::to_string(b));
          }
        }
      }
  }
  return out;
}

int run_agent(const std::string& url, const std::string& level, int budget, std::uint64_t seed,
              const std::string& templates, bool as_json) {
  Api api(url);
  auto [ls, info] = api.call("GET", "/api/levels/" + level);
  if (ls != 200) {
    std::cerr << "level " << level << ": " << info.dump() << "\n";
    return 2;
  }
  lang::TypeEnv env;
  for (const auto& [name, t] : info.at("env").items()) env[name] = *type_from_string(t.get<std::string>());
  auto program = lang::load_program(info.at("source").get<std::string>());

  auto [cs, created] = api.call("POST", "/api/sessions", json::object());
  const std::string base = "/api/sessions/" + created.at("session").get<std::string>() + "/levels/" + level;
  auto [ss, state] = api.call("GET", base + "/state");
  bool solved = state.value("solved", false);

  // Local traces: the starter inputs plus a few sampled ones.
  std::vector<interp::State> rows;
  std::vector<json> inputs = {info.at("starterInputs")};
  interp::Rng rng(seed);
  for (int i = 0; i < 3; ++i) {
    if (auto in = interp::sample_inputs(program, rng)) inputs.push_back(service::to_json(*in));
  }
  for (const auto& in : inputs) {
    auto [ts, trace] = api.call("POST", base + "/trace", {{"inputs", in}});
    if (ts != 200 && !trace.contains("trace")) continue;
    const json& t = ts == 200 ? trace : trace.at("trace");
    for (const auto& row : t.at("rows")) {
      if (auto st = service::state_from_json(env, row.at("values"))) rows.push_back(*st);
    }
  }

  std::set<std::string> families;
  std::stringstream fs(templates);
  for (std::string f; std::getline(fs, f, ',');)
    if (!f.empty()) families.insert(f);
  std::vector<std::string> vars;
  for (const auto& [name, t] : env)
    if (t != lang::Type::Boolean) vars.push_back(name);

  struct Candidate {
    std::string text;
    std::string key;
  };
  std::vector<Candidate> survivors;
  std::set<std::string> seen;
  for (const auto& text : candidates(vars, families)) {
    lang::ExprPtr e;
    try {
      e = lang::parse_expr(text, env);
    } catch (const lang::LangError&) {
      continue;
    }
    std::string key = lang::to_string(*e);
    if (!seen.insert(key).second) continue;
    bool ok = std::all_of(rows.begin(), rows.end(), [&](const interp::State& r) { return interp::holds_or_false(*e, r); });
    if (ok) survivors.push_back({text, key});
  }
  std::stable_sort(survivors.begin(), survivors.end(),
                   [](const Candidate& a, const Candidate& b) { return a.key.size() < b.key.size(); });

  json log = json::array();
  int submitted = 0;
  for (const auto& c : survivors) {
    if (solved || submitted >= budget) break;
    auto [status, r] = api.call("POST", base + "/propose", {{"expr", c.text}});
    ++submitted;
    std::string kind = status == 200 ? r.at("kind").get<std::string>() : "http " + std::to_string(status);
    log.push_back({{"expr", c.text}, {"kind", kind}});
    if (!as_json) std::cout << kind << "\t" << c.text << "\n";
    if (status == 200) solved = r.value("solved", false);
  }
  auto [fs2, final_state] = api.call("GET", base + "/state");
  if (as_json) {
    std::cout << json{{"proposals", log},
                      {"solved", solved},
                      {"inductive", final_state.value("inductive", json::array())},
                      {"potential", final_state.value("potential", json::array())},
                      {"score", final_state.value("score", 0)}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << submitted << " proposals, " << (solved ? "solved" : "unsolved") << "\n";
  }
  return solved ? 0 : 1;
}

// ---------------------------------------------------------------------------
// serve

int run_serve(const std::string& host, int port, service::ServiceConfig cfg) {
  cfg.log = service::stderr_log();
  service::Service svc(cfg, service::load_levels(cfg.levels_dir));
  auto report = svc.restore();
  httplib::Server server;
  svc.mount(server);
  std::cerr << json{{"event", "listening"},
                    {"host", host},
                    {"port", port},
                    {"restoredEvents", report.events},
                    {"divergent", report.divergent}}
                   .dump()
            << "\n";
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop-invariant analysis tools"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "Characterize an invariant list against a program");
  std::string program_path, inv_path;
  int unroll = vcgen::kDefaultUnrollBound;
  double timeout = 10;
  bool as_json = false;
  verify->add_option("--program", program_path, "SIP source or level JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--invariants", inv_path, "One expression per line, # comments")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--unroll", unroll, "Unrolling bound")->check(CLI::PositiveNumber);
  verify->add_option("--timeout", timeout, "Prover timeout in seconds")->check(CLI::PositiveNumber);
  verify->add_flag("--json", as_json, "Machine-readable report");

  auto* agent = app.add_subcommand("agent", "Play a level through the service API");
  std::string url = "http://127.0.0.1:8080", level, templates = "const,pair,linear";
  int budget = 200;
  std::uint64_t seed = 1;
  agent->add_option("--url", url, "Service base URL");
  agent->add_option("--level", level, "Level id")->required();
  agent->add_option("--budget", budget, "Maximum submissions")->check(CLI::NonNegativeNumber);
  agent->add_option("--seed", seed, "Seed for sampled trace inputs");
  agent->add_option("--templates", templates, "Comma-separated families: const, pair, linear");
  agent->add_flag("--json", as_json, "Machine-readable report");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  std::string levels_dir, data_dir;
  serve->add_option("--levels", levels_dir, "Level directory (SIPINV_LEVELS)");
  serve->add_option("--data", data_dir, "Event log directory (SIPINV_DATA)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) return run_verify(program_path, inv_path, unroll, timeout, as_json);
    if (*agent) return run_agent(url, level, budget, seed, templates, as_json);
    auto cfg = service::config_from_env();
    if (!levels_dir.empty()) cfg.levels_dir = levels_dir;
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    return run_serve(host, port, cfg);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}
