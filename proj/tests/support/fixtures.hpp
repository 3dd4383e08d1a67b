#pragma once

#include <sipinv/lang/ast.hpp>
#include <sipinv/lang/parser.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace sipinv::fixtures {

inline std::filesystem::path levels_dir() { return SIPINV_LEVELS_DIR; }
inline std::filesystem::path fixtures_dir() { return SIPINV_FIXTURES_DIR; }

inline nlohmann::json level_json(const std::string& id) {
  for (const auto& entry : std::filesystem::directory_iterator(levels_dir())) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    auto j = nlohmann::json::parse(in);
    if (j.at("id") == id) return j;
  }
  throw std::runtime_error("no fixture level '" + id + "'");
}

inline lang::Program level_program(const std::string& id) {
  return lang::load_program(level_json(id).at("source").get<std::string>());
}

inline std::vector<std::string> level_ids() {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& entry : std::filesystem::directory_iterator(levels_dir())) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    files.emplace_back(entry.path().filename().string(), nlohmann::json::parse(in).at("id"));
  }
  std::sort(files.begin(), files.end());
  std::vector<std::string> ids;
  for (auto& f : files) ids.push_back(f.second);
  return ids;
}

}  // namespace sipinv::fixtures
