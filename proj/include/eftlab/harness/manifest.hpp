#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "eftlab/errors.hpp"
#include "eftlab/harness/config.hpp"

namespace eftlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunManifest {
  std::string config_hash;
  std::string artifact_version = kArtifactVersion;
  std::string created_utc;
  std::string study;
  std::map<std::string, std::string> checkpoints;  // label -> path
  std::map<std::string, std::string> outputs;      // label -> path
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline RunManifest make_manifest(const ExperimentConfig& cfg,
                                 const std::string& study) {
  RunManifest m;
  m.config_hash = config_hash(cfg);
  m.created_utc = utc_timestamp();
  m.study = study;
  return m;
}

// Written exactly once per run directory.
inline void write_manifest(const RunManifest& m, const std::string& dir) {
  nlohmann::json j;
  j["config_hash"] = m.config_hash;
  j["artifact_version"] = m.artifact_version;
  j["created_utc"] = m.created_utc;
  j["study"] = m.study;
  j["checkpoints"] = m.checkpoints;
  j["outputs"] = m.outputs;
  const std::string path =
      (std::filesystem::path(dir) / "manifest.json").string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << j.dump(2) << "\n";
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace eftlab
