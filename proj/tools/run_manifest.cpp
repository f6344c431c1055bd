#include "run_manifest.hpp"

#include <chrono>
#include <fstream>

#include "flarepp/raster.hpp"
#include "flarepp/time_util.hpp"
#include "flarepp/version.hpp"

namespace flarepp::cli {

Json RunManifest::to_json() const {
  Json j;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["version"] = std::string(kVersion);
  j["dry_run"] = dry_run;
  j["started"] = started;
  j["finished"] = finished;
  j["exit_code"] = exit_code;
  if (!error.empty()) j["error"] = error;
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.config = j.value("config", Json::object());
  m.seed = j.value("seed", std::uint64_t{0});
  m.inputs = j.value("inputs", std::vector<std::string>{});
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.dry_run = j.value("dry_run", false);
  return m;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  return format_iso8601(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << m.to_json().dump(2) << "\n";
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    return RunManifest::from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace flarepp::cli
