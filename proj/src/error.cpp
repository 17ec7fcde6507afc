#include "patron/error.hpp"

namespace patron {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::ProbRowInvalid: return "ProbRowInvalid";
    case ErrorCode::RawProbInvalid: return "RawProbInvalid";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidBudget: return "InvalidBudget";
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::BudgetExceedsPool: return "BudgetExceedsPool";
    case ErrorCode::LabeledPoolInvalid: return "LabeledPoolInvalid";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::DegenerateRow: return "DegenerateRow";
    case ErrorCode::ZeroVector: return "ZeroVector";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IoFailure:
    case ErrorCode::DegenerateRow:
    case ErrorCode::ZeroVector:
      return false;
    default:
      return true;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message) {}

Error Error::with_stage(std::string stage) const {
  Error tagged(code_, detail_);
  static_cast<std::runtime_error&>(tagged) =
      std::runtime_error("[" + stage + "] " + std::string(to_string(code_)) + ": " + detail_);
  tagged.stage_ = std::move(stage);
  return tagged;
}

}  // namespace patron
