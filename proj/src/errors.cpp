#include "benign/errors.hpp"

namespace benign {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kTailEmpty: return "TailEmpty";
    case ErrorCode::kBadSplit: return "BadSplit";
    case ErrorCode::kSpectrumNotSorted: return "SpectrumNotSorted";
    case ErrorCode::kBadMoment: return "BadMoment";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kTailRankDeficient: return "TailRankDeficient";
    case ErrorCode::kPropositionViolation: return "PropositionViolation";
    case ErrorCode::kConeEmpty: return "ConeEmpty";
    case ErrorCode::kRegimeViolation: return "RegimeViolation";
    case ErrorCode::kNoBenignSplit: return "NoBenignSplit";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kExperimentFailed: return "ExperimentFailed";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace benign
