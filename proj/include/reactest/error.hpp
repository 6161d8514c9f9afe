#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reactest {

enum class ErrorKind {
  InvalidArgument,
  SyntaxError,
  UnsupportedFragment,
  UnknownProposition,
  EmptyProgress,
  PropositionMismatch,
  UnknownState,
  EmptyTarget,
  EmptyIntermediate,
  EmptyClass,
  DanglingEdge,
  UnsatisfiableContext,
  NumericalInstability,
  Infeasible,
  IterationLimit,
  NoFeasibleLambda,
  TooLarge,
  NoSuccessor,
  NoPath,
  AgentIllegalMove,
  Deadlock,
  BadGeometry,
  MapParseError,
  BadModeGraph,
  ValidationError,
  GraphHashMismatch,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace reactest
