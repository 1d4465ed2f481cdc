#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "refugia/continuation.hpp"

namespace refugia::harness {

struct PlotOutcome {
  bool written = false;
  std::string diagnostic;  // why nothing was written
};

/// Standalone SVG, amplitude against mu. Each branch is one <polyline>;
/// stable stretches are overlaid as solid <path>s, unstable ones dashed.
/// mu* is a <circle> on the zero line, drawn only when a report is given.
/// An empty branch list is refused without touching the file system.
/// Throws IoError when the file cannot be written.
PlotOutcome emit_plot(const std::vector<Branch>& branches, const BifurcationReport* report,
                      const std::filesystem::path& path);

/// Same document as a string.
std::string render_plot(const std::vector<Branch>& branches, const BifurcationReport* report);

}  // namespace refugia::harness
