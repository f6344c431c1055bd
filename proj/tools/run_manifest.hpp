#pragma once
// Per-run JSON record: command, original arguments, resolved configuration,
// inputs/outputs and timing. `replay` re-executes the stored arguments.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace flarepp::cli {

using Json = nlohmann::ordered_json;

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  bool dry_run = false;
  std::string started;
  std::string finished;
  int exit_code = 0;
  std::string error;

  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

std::string utc_now();

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace flarepp::cli
