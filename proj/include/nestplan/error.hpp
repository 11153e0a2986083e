#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nestplan {

enum class ErrorCode {
  // constraint tree
  UnknownId,
  AlreadyGrouped,
  GroupFrozen,
  CycleError,
  NotRoot,
  AlreadyExported,
  InvalidArgument,
  // geometry
  NegativePadding,
  EmptyInput,
  NonPositiveCell,
  DegenerateInput,
  NotIntersecting,
  // placement
  Infeasible,
  InvalidSpec,
  NoConvergence,
  // sequencing
  IKFailure,
  CyclicPrecedence,
  // kinematics
  LimitViolation,
  NoSolution,
  StartInCollision,
  GoalInCollision,
  Timeout,
  // file formats
  Schema,
  DuplicateId,
  DegenerateMesh,
  FormatVersion,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every fallible operation in the library throws this. `subject` names the
/// offending id (group, object, joint) when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string subject = {})
      : std::runtime_error(std::move(message)), code_(code), subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace nestplan
