#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace patron {

enum class ErrorCode {
  InvalidArgument,
  InvalidManifest,
  MissingFile,
  SizeMismatch,
  ProbRowInvalid,
  RawProbInvalid,
  LabelOutOfRange,
  IoFailure,
  InvalidBudget,
  DuplicateIndex,
  IndexOutOfRange,
  BudgetExceedsPool,
  LabeledPoolInvalid,
  MissingLabels,
  DegenerateRow,
  ZeroVector,
};

std::string_view to_string(ErrorCode code) noexcept;

// Validation errors map to CLI exit code 2, computation errors to 3.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& stage() const noexcept { return stage_; }

  // Returns a copy tagged with the pipeline stage that raised it.
  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string detail_;
  std::string stage_;
};

}  // namespace patron
