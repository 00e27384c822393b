#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rimr {

// Stable error codes. Names are part of the service wire format.
enum class ErrorCode {
  kMissingField,
  kEmptyFactorList,
  kOversizeKeyword,
  kInvalidValue,
  kMissingThinkBlock,
  kMissingStep,
  kUnknownLabel,
  kEmptyReply,
  kNoDecision,
  kAmbiguousDecision,
  kPrecondition,
  kOutOfRange,
  kNonMonotoneIndices,
  kIndexMismatch,
  kTokenOutOfVocab,
  kEmptyGroup,
  kShapeMismatch,
  kBackendFailure,
  kParseFailure,
  kValidationFailure,
  kStructureMismatch,
  kNoClientTurns,
  kTooFewUtterances,
  kEmptyInput,
  kSessionNotFound,
  kSessionTerminated,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Client-output parse failure. `step()` is the 1-based missing step for kMissingStep, else 0.
class ClientOutputError : public Error {
 public:
  ClientOutputError(ErrorCode code, const std::string& message, int step = 0)
      : Error(code, message), step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& message) : Error(ErrorCode::kBackendFailure, message) {}
};

}  // namespace rimr
