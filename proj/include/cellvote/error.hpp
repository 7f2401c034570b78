#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cellvote {

enum class ErrorKind {
  InvalidArgument,
  DomainError,
  IncompleteBallot,
  InvalidBallot,
  InvalidLabel,
  ParseError,
  MissingFile,
  IoError,
  DuplicateItem,
  UnknownItem,
  NonFiniteEnergy,
  EmptyBatch,
  NotQualified,
  NoneAvailable,
  DeadlineExceeded,
  WrongState,
  UnknownTask,
  UnknownAssignment,
  UnknownWorker,
  UnknownBatch,
  DuplicateWorker,
  InsufficientWorkers,
  TargetUnreachable,
};

std::string_view to_string(ErrorKind kind);

// Every failure in the library surfaces as this exception; callers branch on
// kind() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cellvote
