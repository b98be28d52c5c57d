#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hideseek {

enum class ErrorCode {
  kMissingFile,
  kUnsupportedFormat,
  kCorruptData,
  kIo,
  kShapeMismatch,
  kInvalidArgument,
  kOutOfRange,
  kInfeasible,
  kBudgetExhausted,
  kEmptyInput,
  kInvalidConfig,
  kModelMismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and the CLI's JSON error output) can tell them apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string context = {});

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string& context() const noexcept { return context_; }

 private:
  ErrorCode code_;
  std::string context_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message, std::string context = {});

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) fail(code, message);
}

}  // namespace hideseek
