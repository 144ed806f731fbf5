#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace benign {

enum class ErrorCode {
  kInvalidArgument,
  kTailEmpty,
  kBadSplit,
  kSpectrumNotSorted,
  kBadMoment,
  kRankDeficient,
  kTailRankDeficient,
  kPropositionViolation,
  kConeEmpty,
  kRegimeViolation,
  kNoBenignSplit,
  kConfigError,
  kConfigMismatch,
  kExperimentFailed,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the harness, the CLI) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace benign
