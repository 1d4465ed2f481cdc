#include "refugia/error.hpp"

namespace refugia {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::DegenerateGrid: return "DegenerateGrid";
    case Errc::RefugeTouchesBoundary: return "RefugeTouchesBoundary";
    case Errc::NonPositiveAttackRate: return "NonPositiveAttackRate";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::RegionMismatch: return "RegionMismatch";
    case Errc::NegativePrey: return "NegativePrey";
    case Errc::LinearSolveFailure: return "LinearSolveFailure";
    case Errc::StepRejected: return "StepRejected";
    case Errc::SingularJacobian: return "SingularJacobian";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::EigenNoConvergence: return "EigenNoConvergence";
    case Errc::NoCrossing: return "NoCrossing";
    case Errc::FellBackToSemitrivial: return "FellBackToSemitrivial";
    case Errc::ContinuationStalled: return "ContinuationStalled";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace refugia
