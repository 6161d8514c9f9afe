#include "reactest/error.hpp"

namespace reactest {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnsupportedFragment: return "UnsupportedFragment";
    case ErrorKind::UnknownProposition: return "UnknownProposition";
    case ErrorKind::EmptyProgress: return "EmptyProgress";
    case ErrorKind::PropositionMismatch: return "PropositionMismatch";
    case ErrorKind::UnknownState: return "UnknownState";
    case ErrorKind::EmptyTarget: return "EmptyTarget";
    case ErrorKind::EmptyIntermediate: return "EmptyIntermediate";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::DanglingEdge: return "DanglingEdge";
    case ErrorKind::UnsatisfiableContext: return "UnsatisfiableContext";
    case ErrorKind::NumericalInstability: return "NumericalInstability";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::IterationLimit: return "IterationLimit";
    case ErrorKind::NoFeasibleLambda: return "NoFeasibleLambda";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NoSuccessor: return "NoSuccessor";
    case ErrorKind::NoPath: return "NoPath";
    case ErrorKind::AgentIllegalMove: return "AgentIllegalMove";
    case ErrorKind::Deadlock: return "Deadlock";
    case ErrorKind::BadGeometry: return "BadGeometry";
    case ErrorKind::MapParseError: return "MapParseError";
    case ErrorKind::BadModeGraph: return "BadModeGraph";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::GraphHashMismatch: return "GraphHashMismatch";
  }
  return "Unknown";
}

}  // namespace reactest
