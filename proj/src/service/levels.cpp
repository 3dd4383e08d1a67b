#include <sipinv/interp/interp.hpp>
#include <sipinv/lang/parser.hpp>
#include <sipinv/service/service.hpp>

#include <algorithm>

namespace sipinv::service {

Level parse_level(const json& j) {
  Level l;
  try {
    l.id = j.at("id").get<std::string>();
    l.title = j.value("title", l.id);
    l.source = j.at("source").get<std::string>();
    l.tutorial = j.value("tutorial", false);
    if (j.contains("unrollBound")) l.unroll_bound = j.at("unrollBound").get<int>();
  } catch (const json::exception& err) {
    throw std::invalid_argument(std::string("malformed level: ") + err.what());
  }
  if (l.unroll_bound && *l.unroll_bound < 1) throw std::invalid_argument("level " + l.id + ": unrollBound must be >= 1");
  l.program = lang::load_program(l.source);
  try {
    l.starter_inputs = inputs_from_json(l.program, j.value("starterInputs", json::object()));
    if (l.program.pre && !interp::holds(*l.program.pre, l.starter_inputs)) {
      throw std::invalid_argument("level " + l.id + ": starter inputs violate the precondition");
    }
  } catch (const interp::InputError& err) {
    throw std::invalid_argument("level " + l.id + ": " + err.what());
  }
  return l;
}

std::vector<Level> load_levels(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Level> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      out.push_back(parse_level(json::parse(in)));
    } catch (const std::exception& err) {
      throw std::invalid_argument(f.filename().string() + ": " + err.what());
    }
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      if (out[i].id == out.back().id) throw std::invalid_argument("duplicate level id '" + out.back().id + "'");
    }
  }
  return out;
}

}  // namespace sipinv::service
