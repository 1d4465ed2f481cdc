#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refugia/dynamics.hpp"
#include "refugia/error.hpp"
#include "refugia/geometry.hpp"
#include "refugia/operators.hpp"
#include "refugia/steady.hpp"

namespace refugia::harness {

enum class ExperimentKind { Simulate, Steady, Continue, Bifurcate, Verify };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view text);

struct MuRange {
  double min = 0.8;
  double max = 1.2;
  int points = 9;
  bool operator==(const MuRange&) const = default;
};

/// u(x,0) = u0 * lambda and v(x,0) = v0, each multiplied by (1 + perturbation * xi)
/// with xi uniform in [-1, 1] drawn from the run seed.
struct InitialCondition {
  double u0 = 1.0;
  double v0 = 0.05;
  double perturbation = 0.0;
  bool operator==(const InitialCondition&) const = default;
};

struct ContinuationSettings {
  double s0 = 0.02;
  double ds = 0.02;
  int steps = 40;
  double max_amplitude = 0.5;
  int sample_every = 5;
  bool operator==(const ContinuationSettings&) const = default;
};

struct OutputOptions {
  bool dump_mask = false;
  bool dump_jacobian = false;
  bool operator==(const OutputOptions&) const = default;
};

struct RunConfig {
  ExperimentKind kind = ExperimentKind::Steady;
  std::string output = "refugia_out";
  std::uint64_t seed = 0;

  GridSpec grid;
  RefugeShape refuge;

  ModelParams params;  // params.mu mirrors `mu` when that is set
  std::optional<double> mu;
  std::optional<MuRange> mu_range;

  NewtonConfig newton;
  TransientConfig transient;
  InitialCondition initial;
  double steady_v0 = 1.0;  // amplitude of the steady-solve initial guess (lambda, 0) + v0 (-alpha, 1)
  ContinuationSettings continuation;
  OutputOptions outputs;

  bool operator==(const RunConfig&) const = default;
};

struct ConfigIssue {
  int line = 0;  // 0 when the problem is not tied to a line
  std::string key;
  std::string message;
};

/// Carries every problem found; code() is ParseError when any line failed to
/// parse, ValidationError otherwise.
class ConfigError : public Error {
 public:
  ConfigError(Errc code, std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Flat `key = value` text; `#` starts a comment. `kind_override` (the CLI
/// subcommand) replaces experiment.kind.
RunConfig parse_config(std::string_view text, std::optional<ExperimentKind> kind_override = std::nullopt);

/// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& cfg);

/// Every key parse_config accepts.
std::vector<std::string> known_config_keys();

}  // namespace refugia::harness
