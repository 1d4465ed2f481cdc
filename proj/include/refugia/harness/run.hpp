#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "refugia/harness/config.hpp"

namespace refugia::harness {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kManifestName = "manifest.txt";
inline constexpr std::string_view kLockName = ".refugia.lock";

struct StageOutcome {
  std::string name;
  bool ok = false;
  std::string detail;  // error code and message on failure
};

struct FileRecord {
  std::string path;  // relative to the output directory, '/' separated
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  RunConfig config;
  std::string tool_version;
  std::string start;  // UTC, ISO 8601
  std::string end;
  std::vector<StageOutcome> stages;
  std::vector<FileRecord> files;  // everything in the output directory but the manifest and lock
  int exit_status = 0;
};

/// Runs the configured experiment into cfg.output, then writes manifest.txt.
/// Stage failures are recorded, not thrown; exit_status is 0 iff every stage
/// succeeded (and, for verify, every audit passed). Throws IoError when the
/// directory is locked by another run or cannot be written.
RunManifest run_experiment(const RunConfig& cfg, std::ostream* log = nullptr);

void write_manifest(const RunManifest& m, std::ostream& out);

}  // namespace refugia::harness
