#include "cellvote/error.hpp"

namespace cellvote {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::IncompleteBallot: return "IncompleteBallot";
    case ErrorKind::InvalidBallot: return "InvalidBallot";
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::DuplicateItem: return "DuplicateItem";
    case ErrorKind::UnknownItem: return "UnknownItem";
    case ErrorKind::NonFiniteEnergy: return "NonFiniteEnergy";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::NotQualified: return "NotQualified";
    case ErrorKind::NoneAvailable: return "NoneAvailable";
    case ErrorKind::DeadlineExceeded: return "DeadlineExceeded";
    case ErrorKind::WrongState: return "WrongState";
    case ErrorKind::UnknownTask: return "UnknownTask";
    case ErrorKind::UnknownAssignment: return "UnknownAssignment";
    case ErrorKind::UnknownWorker: return "UnknownWorker";
    case ErrorKind::UnknownBatch: return "UnknownBatch";
    case ErrorKind::DuplicateWorker: return "DuplicateWorker";
    case ErrorKind::InsufficientWorkers: return "InsufficientWorkers";
    case ErrorKind::TargetUnreachable: return "TargetUnreachable";
  }
  return "Unknown";
}

}  // namespace cellvote
