#pragma once

#include <stdexcept>
#include <string>

namespace crosskit {

enum class ErrorKind {
  BranchPointError,
  InvalidPotential,
  DegenerateSlope,
  DomainError,
  WronskianDegenerate,
  PoleError,
  ClosedEntranceChannel,
  NonConstantAsymptotics,
  NoConvergence,
  SingularSystem,
  NonIntegrable,
  QuadratureFailure,
  TailTooHeavy,
  GridTooCoarse,
  StabilityViolation,
  SchemaError,
};

const char* to_string(ErrorKind kind);

// Every solver failure carries the module it came from and a machine-readable
// kind, so the CLI can map it to an exit status and a stable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " [" + module +
                           "]: " + message),
        kind_(kind),
        module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BranchPointError: return "BranchPointError";
    case ErrorKind::InvalidPotential: return "InvalidPotential";
    case ErrorKind::DegenerateSlope: return "DegenerateSlope";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::WronskianDegenerate: return "WronskianDegenerate";
    case ErrorKind::PoleError: return "PoleError";
    case ErrorKind::ClosedEntranceChannel: return "ClosedEntranceChannel";
    case ErrorKind::NonConstantAsymptotics: return "NonConstantAsymptotics";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::TailTooHeavy: return "TailTooHeavy";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::StabilityViolation: return "StabilityViolation";
    case ErrorKind::SchemaError: return "SchemaError";
  }
  return "UnknownError";
}

}  // namespace crosskit
