#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tierbench {

// Every failure raised by the library carries one of these codes so callers
// (and the CLI manifest) can branch on the kind without parsing messages.
enum class ErrorCode {
  kUnknownLabel,
  kUnknownJournal,
  kChanceOutOfRange,
  kSchemaError,
  kDuplicatePitchId,
  kEmptyFile,
  kOutOfRangeLikert,
  kInsufficientTier,
  kEmptyLogprobs,
  kInvalidLogprob,
  kInvalidDistribution,
  kLengthMismatch,
  kInvalidWeights,
  kPolicyParamMissing,
  kEmptyInput,
  kEmptyCounts,
  kMissingConfidence,
  kInvalidConfidence,
  kDegenerateSplit,
  kInsufficientRatings,
  kDegenerateMarginals,
  kNoVariation,
  kInsufficientData,
  kEmptyPitch,
  kInsufficientPairs,
  kForeignPitchId,
  kUnknownPairId,
  kGroupTooSmall,
  kNonFiniteRatio,
  kWrongDiagnosticCount,
  kInvalidArgument,
  kTransportError,
  kAuthError,
  kNoLabelTokens,
  kPartialCollection,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tierbench
