#include "nestplan/error.hpp"

namespace nestplan {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::AlreadyGrouped: return "AlreadyGrouped";
    case ErrorCode::GroupFrozen: return "GroupFrozen";
    case ErrorCode::CycleError: return "CycleError";
    case ErrorCode::NotRoot: return "NotRoot";
    case ErrorCode::AlreadyExported: return "AlreadyExported";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NegativePadding: return "NegativePadding";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveCell: return "NonPositiveCell";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NotIntersecting: return "NotIntersecting";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::IKFailure: return "IKFailure";
    case ErrorCode::CyclicPrecedence: return "CyclicPrecedence";
    case ErrorCode::LimitViolation: return "LimitViolation";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::StartInCollision: return "StartInCollision";
    case ErrorCode::GoalInCollision: return "GoalInCollision";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::Schema: return "SCHEMA";
    case ErrorCode::DuplicateId: return "DUP_ID";
    case ErrorCode::DegenerateMesh: return "DEGENERATE_MESH";
    case ErrorCode::FormatVersion: return "FORMAT_VERSION";
    case ErrorCode::Io: return "IO";
  }
  return "Unknown";
}

}  // namespace nestplan
