#include "hideseek/error.hpp"

namespace hideseek {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kCorruptData: return "corrupt_data";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kBudgetExhausted: return "budget_exhausted";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kModelMismatch: return "model_mismatch";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string context)
    : std::runtime_error(message), code_(code), context_(std::move(context)) {}

void fail(ErrorCode code, const std::string& message, std::string context) {
  throw Error(code, message, std::move(context));
}

}  // namespace hideseek
