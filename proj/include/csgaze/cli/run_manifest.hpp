#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "csgaze/common.hpp"

namespace csgaze::cli {

inline constexpr const char* kToolVersion = "csgaze 0.1.0";

// Record of one command invocation: everything needed to replay it plus the
// digests proving which inputs it actually read.  This file is the one place
// wall-clock timing appears; every other artifact is a pure function of
// (inputs, config, seed) so reruns stay byte-identical.
struct RunManifest {
  std::string command;
  nlohmann::json config;                        // fully resolved, flags applied
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;    // path -> content digest
  std::vector<std::string> outputs;             // paths written, relative to out dir
  std::string version = kToolVersion;
  double wall_seconds = 0;
};

inline void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"command", m.command}, {"config", m.config},
                     {"seed", m.seed},       {"inputs", m.inputs},
                     {"outputs", m.outputs}, {"version", m.version},
                     {"wall_seconds", m.wall_seconds}};
}

inline void save_run_manifest(const RunManifest& m, const std::filesystem::path& out_dir) {
  nlohmann::json j = m;
  write_text_file(out_dir / "run_manifest.json", j.dump(2) + "\n");
}

// Scoped stopwatch: commands construct one up front and read it when the
// manifest is assembled.
class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    auto d = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration<double>(d).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace csgaze::cli
