#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refugia {

enum class Errc {
  DegenerateGrid,
  RefugeTouchesBoundary,
  NonPositiveAttackRate,
  InvalidParams,
  RegionMismatch,
  NegativePrey,
  LinearSolveFailure,
  StepRejected,
  SingularJacobian,
  NoConvergence,
  EigenNoConvergence,
  NoCrossing,
  FellBackToSemitrivial,
  ContinuationStalled,
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(Errc code);

/// Single exception type for the library; the code identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace refugia
