#pragma once

// Error taxonomy shared by every module. Each condition named in a module
// contract maps to one code so the C API and the CLI exit paths can translate
// failures without string matching.

#include <stdexcept>
#include <string>

namespace faithrl {

enum class ErrorCode {
  InvalidArgument,
  Schema,             // malformed input files / contract violations at parse time
  NumericalFailure,   // non-finite value where a finite one is required
  THSUndefined,       // baseline hallucination rate is zero
  EmptyBatch,
  GroupTooSmall,
  EnumerationOverflow,
  CannotPrune,
  FilterAborted,
  JudgeProtocolError,
  JudgeUnavailable,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Schema: return "Schema";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::THSUndefined: return "THSUndefined";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::EnumerationOverflow: return "EnumerationOverflow";
    case ErrorCode::CannotPrune: return "CannotPrune";
    case ErrorCode::FilterAborted: return "FilterAborted";
    case ErrorCode::JudgeProtocolError: return "JudgeProtocolError";
    case ErrorCode::JudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace faithrl
