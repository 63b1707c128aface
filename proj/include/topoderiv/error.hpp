#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace topoderiv {

enum class ErrorCode {
  // finite topology
  MissingEmptyOrFull,
  NotClosedUnderUnion,
  NotClosedUnderIntersection,
  IndexOutOfRange,
  SizeLimitExceeded,
  // filters
  NotIndicator,
  AxiomA,
  AxiomB,
  AxiomC,
  ImproperFilter,
  NotContinuous,
  TopologyMismatch,
  WeightSumInvalid,
  // pair calculus
  RepresentationMismatch,
  EmptySlice,
  BudgetExhausted,
  // metric filters
  NonUnitDirection,
  InvalidGenerator,
  DegenerateTerm,
  CurveNotBiLipschitz,
  InvalidWitness,
  SingularJacobian,
  NoDirectionLimit,
  // snowflake
  DegenerateGenerator,
  ConstraintViolation,
  NotLipschitz,
  TrivialDevelopment,
  // flows
  DomainViolation,
  RecipeUnsatisfiable,
  InverseResidualTooLarge,
  NotBiLipschitz,
  // cli
  UnknownSuite,
  ConfigInvalid,
  ParseError,
  SchemaViolation,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingEmptyOrFull: return "MissingEmptyOrFull";
    case ErrorCode::NotClosedUnderUnion: return "NotClosedUnderUnion";
    case ErrorCode::NotClosedUnderIntersection: return "NotClosedUnderIntersection";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SizeLimitExceeded: return "SizeLimitExceeded";
    case ErrorCode::NotIndicator: return "NotIndicator";
    case ErrorCode::AxiomA: return "AxiomA";
    case ErrorCode::AxiomB: return "AxiomB";
    case ErrorCode::AxiomC: return "AxiomC";
    case ErrorCode::ImproperFilter: return "ImproperFilter";
    case ErrorCode::NotContinuous: return "NotContinuous";
    case ErrorCode::TopologyMismatch: return "TopologyMismatch";
    case ErrorCode::WeightSumInvalid: return "WeightSumInvalid";
    case ErrorCode::RepresentationMismatch: return "RepresentationMismatch";
    case ErrorCode::EmptySlice: return "EmptySlice";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::NonUnitDirection: return "NonUnitDirection";
    case ErrorCode::InvalidGenerator: return "InvalidGenerator";
    case ErrorCode::DegenerateTerm: return "DegenerateTerm";
    case ErrorCode::CurveNotBiLipschitz: return "CurveNotBiLipschitz";
    case ErrorCode::InvalidWitness: return "InvalidWitness";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::NoDirectionLimit: return "NoDirectionLimit";
    case ErrorCode::DegenerateGenerator: return "DegenerateGenerator";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::NotLipschitz: return "NotLipschitz";
    case ErrorCode::TrivialDevelopment: return "TrivialDevelopment";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::RecipeUnsatisfiable: return "RecipeUnsatisfiable";
    case ErrorCode::InverseResidualTooLarge: return "InverseResidualTooLarge";
    case ErrorCode::NotBiLipschitz: return "NotBiLipschitz";
    case ErrorCode::UnknownSuite: return "UnknownSuite";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this exception. The
/// witness carries the offending open sets (as masks) or indices, in the
/// order documented by the throwing operation.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::vector<std::uint64_t> witness = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        witness_(std::move(witness)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::uint64_t>& witness() const noexcept { return witness_; }

 private:
  ErrorCode code_;
  std::vector<std::uint64_t> witness_;
};

/// Outcome of a decision procedure that names a counterexample when it fails.
template <typename Witness>
struct Check {
  bool ok = true;
  std::optional<Witness> witness;

  static Check pass() { return Check{}; }
  static Check fail(Witness w) { return Check{false, std::move(w)}; }

  explicit operator bool() const noexcept { return ok; }
};

}  // namespace topoderiv
