#include "tierbench/error.hpp"

namespace tierbench {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kUnknownJournal: return "UnknownJournal";
    case ErrorCode::kChanceOutOfRange: return "ChanceOutOfRange";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kDuplicatePitchId: return "DuplicatePitchId";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kOutOfRangeLikert: return "OutOfRangeLikert";
    case ErrorCode::kInsufficientTier: return "InsufficientTier";
    case ErrorCode::kEmptyLogprobs: return "EmptyLogprobs";
    case ErrorCode::kInvalidLogprob: return "InvalidLogprob";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInvalidWeights: return "InvalidWeights";
    case ErrorCode::kPolicyParamMissing: return "PolicyParamMissing";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptyCounts: return "EmptyCounts";
    case ErrorCode::kMissingConfidence: return "MissingConfidence";
    case ErrorCode::kInvalidConfidence: return "InvalidConfidence";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kInsufficientRatings: return "InsufficientRatings";
    case ErrorCode::kDegenerateMarginals: return "DegenerateMarginals";
    case ErrorCode::kNoVariation: return "NoVariation";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kEmptyPitch: return "EmptyPitch";
    case ErrorCode::kInsufficientPairs: return "InsufficientPairs";
    case ErrorCode::kForeignPitchId: return "ForeignPitchId";
    case ErrorCode::kUnknownPairId: return "UnknownPairId";
    case ErrorCode::kGroupTooSmall: return "GroupTooSmall";
    case ErrorCode::kNonFiniteRatio: return "NonFiniteRatio";
    case ErrorCode::kWrongDiagnosticCount: return "WrongDiagnosticCount";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kNoLabelTokens: return "NoLabelTokens";
    case ErrorCode::kPartialCollection: return "PartialCollection";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace tierbench
