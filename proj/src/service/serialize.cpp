#include <sipinv/lang/pretty.hpp>
#include <sipinv/service/service.hpp>

namespace sipinv::service {

using interp::State;

json to_json(const interp::Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  return interp::render(v);
}

json to_json(const State& s) {
  json out = json::object();
  for (const auto& [name, v] : s.values) out[name] = to_json(v);
  return out;
}

json to_json(const interp::Trace& t) {
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back({{"iteration", r.iteration}, {"values", to_json(r)}});
  json out = {{"inputs", to_json(t.inputs)},
              {"rows", rows},
              {"output", t.output},
              {"outcome", std::string(interp::to_string(t.outcome))},
              {"message", t.message}};
  out["post"] = t.post ? to_json(*t.post) : json(nullptr);
  out["guaranteeHolds"] = t.guarantee_holds ? json(*t.guarantee_holds) : json(nullptr);
  out["failingState"] = t.failing_state ? to_json(*t.failing_state) : json(nullptr);
  return out;
}

json to_json(const engine::Invariant& i) { return {{"text", i.text}, {"key", i.key}}; }

json to_json(const engine::Feedback& f) {
  json out = {{"kind", std::string(engine::to_string(f.kind))}, {"solved", f.solved}, {"diagnostic", f.diagnostic}};
  out["ruleOut"] = f.rule_out ? to_json(*f.rule_out) : json(nullptr);
  out["trace"] = f.trace ? to_json(*f.trace) : json(nullptr);
  if (f.state_pair) {
    out["statePair"] = {{"before", to_json(f.state_pair->first)}, {"after", to_json(f.state_pair->second)}};
  } else {
    out["statePair"] = nullptr;
  }
  out["removed"] = json::array();
  for (const auto& i : f.removed) out["removed"].push_back(to_json(i));
  out["promoted"] = json::array();
  for (const auto& i : f.promoted) out["promoted"].push_back(to_json(i));
  return out;
}

namespace {

std::optional<interp::Value> value_from_json(const json& j, lang::Type t) {
  if (j.is_string()) return interp::parse_value(j.get<std::string>(), t);
  if (j.is_boolean()) return interp::parse_value(j.get<bool>() ? "true" : "false", t);
  if (j.is_number_integer()) return interp::parse_value(j.dump(), t);
  return std::nullopt;
}

}  // namespace

State inputs_from_json(const lang::Program& p, const json& j) {
  if (!j.is_object()) throw interp::InputError("inputs must be an object of parameter values");
  State s;
  for (const auto& param : p.params) {
    if (!j.contains(param.name)) throw interp::InputError("missing value for parameter '" + param.name + "'");
    auto v = value_from_json(j.at(param.name), param.type);
    if (!v) {
      throw interp::InputError("'" + j.at(param.name).dump() + "' is not a valid " +
                               std::string(lang::to_string(param.type)) + " for '" + param.name + "'");
    }
    s.values[param.name] = *v;
  }
  for (const auto& [name, _] : j.items()) {
    bool known = std::any_of(p.params.begin(), p.params.end(), [&](const lang::Param& q) { return q.name == name; });
    if (!known) throw interp::InputError("'" + name + "' is not a parameter");
  }
  return s;
}

std::optional<State> state_from_json(const lang::TypeEnv& env, const json& j) {
  if (!j.is_object()) return std::nullopt;
  State s;
  for (const auto& [name, value] : j.items()) {
    auto t = env.find(name);
    if (t == env.end()) return std::nullopt;
    auto v = value_from_json(value, t->second);
    if (!v) return std::nullopt;
    s.values[name] = *v;
  }
  return s;
}

json to_json(const solver::RecordedVerdict& r) {
  return {{"key", std::to_string(r.key)},
          {"verdict", r.verdict},
          {"model", r.model},
          {"cassign", r.cassign},
          {"detail", r.detail}};
}

solver::RecordedVerdict recorded_from_json(const json& j) {
  solver::RecordedVerdict r;
  r.key = std::stoull(j.at("key").get<std::string>());
  r.verdict = j.at("verdict").get<std::string>();
  r.model = j.value("model", std::map<std::string, std::string>{});
  r.cassign = j.value("cassign", std::vector<std::vector<std::string>>{});
  r.detail = j.value("detail", std::string{});
  return r;
}

std::optional<solver::QueryKind> query_kind_from_string(std::string_view s) {
  using solver::QueryKind;
  for (auto k : {QueryKind::Tautology, QueryKind::Displaced, QueryKind::DisplacedPot, QueryKind::Initiation,
                 QueryKind::Unrolled, QueryKind::Consecution, QueryKind::Exit, QueryKind::Feedback,
                 QueryKind::WhyNot, QueryKind::CAssign, QueryKind::Other}) {
    if (solver::to_string(k) == s) return k;
  }
  return std::nullopt;
}

json queries_to_json(const std::vector<std::pair<solver::QueryKind, solver::RecordedVerdict>>& qs) {
  json out = json::array();
  for (const auto& [kind, r] : qs) {
    json item = to_json(r);
    item["kind"] = std::string(solver::to_string(kind));
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<std::pair<solver::QueryKind, solver::RecordedVerdict>> queries_from_json(const json& j) {
  std::vector<std::pair<solver::QueryKind, solver::RecordedVerdict>> out;
  for (const auto& item : j) {
    auto kind = query_kind_from_string(item.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown query kind " + item.at("kind").dump());
    out.emplace_back(*kind, recorded_from_json(item));
  }
  return out;
}

}  // namespace sipinv::service
