#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rmtfactor {

enum class ErrorCode {
  kWindowOutOfRange,
  kDimensionMismatch,
  kDegenerateRow,
  kInvalidArgument,
  kInvalidFactorCount,
  kEmptyBins,
  kSolverFailure,
  kNoPhysicalRoot,
  kSupportNotCovered,
  kBranchCut,
  kBinMismatch,
  kGridExhausted,
  kIndexMismatch,
  kInvalidCoefficient,
  kScheduleOutOfRange,
  kParseError,
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// that callers (and the CLI) can branch on the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rmtfactor
