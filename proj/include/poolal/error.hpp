#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poolal {

enum class ErrorCode {
  InvalidArgument,
  MissingColumn,
  NonNumericCell,
  EmptyFile,
  Io,
  UnknownIndex,
  AlreadyLabelled,
  LabelOutOfRange,
  NonFiniteInput,
  CholeskyFailure,
  NewtonDivergence,
  SingleClass,
  EmptyEvalSet,
  EmptyLabelledSet,
  MissingMembers,
  EmptyPool,
  PoolExhausted,
  SpecError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::Io: return "Io";
    case ErrorCode::UnknownIndex: return "UnknownIndex";
    case ErrorCode::AlreadyLabelled: return "AlreadyLabelled";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::EmptyLabelledSet: return "EmptyLabelledSet";
    case ErrorCode::MissingMembers: return "MissingMembers";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::SpecError: return "SpecError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace poolal
