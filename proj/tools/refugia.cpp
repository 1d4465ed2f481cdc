// refugia <simulate|steady|continue|bifurcate|verify> --config <path> [--out <dir>] [--quiet]

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "refugia/harness/config.hpp"
#include "refugia/harness/run.hpp"

using namespace refugia;
using namespace refugia::harness;

namespace {

void apply_thread_cap() {
  const char* env = std::getenv("REFUGIA_THREADS");
  if (!env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    std::cerr << "warning: ignoring REFUGIA_THREADS=" << env << " (expected a positive integer)\n";
    return;
  }
  Eigen::setNbThreads(static_cast<int>(n));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial predator-prey refuge model: steady states, dynamics and bifurcation"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool quiet = false;
  for (const char* name : {"simulate", "steady", "continue", "bifurcate", "verify"}) {
    auto* sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
    sub->add_option("--config", config_path, "config file (key = value)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides experiment.output)");
    sub->add_flag("--quiet", quiet, "no progress output");
  }
  CLI11_PARSE(app, argc, argv);

  const auto kind = parse_kind(app.get_subcommands().front()->get_name());
  apply_thread_cap();

  std::ifstream in(config_path);
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  RunConfig cfg;
  try {
    cfg = parse_config(text, kind);
  } catch (const ConfigError& e) {
    std::cerr << config_path << ": " << to_string(e.code()) << '\n';
    for (const auto& issue : e.issues()) {
      std::cerr << "  ";
      if (issue.line > 0) std::cerr << "line " << issue.line << ": ";
      if (!issue.key.empty()) std::cerr << issue.key << ": ";
      std::cerr << issue.message << '\n';
    }
    return 2;
  }
  if (!out_dir.empty()) cfg.output = out_dir;

  try {
    const RunManifest m = run_experiment(cfg, quiet ? nullptr : &std::cerr);
    if (!quiet) {
      std::cerr << "wrote " << m.files.size() << " files and " << kManifestName << " to " << cfg.output
                << "; exit status " << m.exit_status << '\n';
    }
    return m.exit_status;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
