#pragma once

#include <stdexcept>
#include <string>

namespace iwmev {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  NonMonotoneTime,
  InfeasiblePower,
  SingularLoadTransfer,
  EmptyObservation,
  NonConvergence,
  NoFeasibleControl,
  InfeasibleStage,
  DegenerateFit,
  SpanTooNarrow,
  MissingArtifact,
  GridMismatch,
  ChecksumMismatch,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

/// Process exit status used by the CLI: 3 for non-convergence, 2 for anything
/// the caller can fix (bad input, missing artifacts, infeasible requests).
inline int exit_code_for(ErrorCode code) {
  return code == ErrorCode::NonConvergence ? 3 : 2;
}

}  // namespace iwmev
