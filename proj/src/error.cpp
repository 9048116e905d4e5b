#include "rmtfactor/error.hpp"

namespace rmtfactor {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kWindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateRow: return "DegenerateRow";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidFactorCount: return "InvalidFactorCount";
    case ErrorCode::kEmptyBins: return "EmptyBins";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kNoPhysicalRoot: return "NoPhysicalRoot";
    case ErrorCode::kSupportNotCovered: return "SupportNotCovered";
    case ErrorCode::kBranchCut: return "BranchCut";
    case ErrorCode::kBinMismatch: return "BinMismatch";
    case ErrorCode::kGridExhausted: return "GridExhausted";
    case ErrorCode::kIndexMismatch: return "IndexMismatch";
    case ErrorCode::kInvalidCoefficient: return "InvalidCoefficient";
    case ErrorCode::kScheduleOutOfRange: return "ScheduleOutOfRange";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace rmtfactor
