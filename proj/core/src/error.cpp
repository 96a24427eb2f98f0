#include "keydyn/error.hpp"

namespace keydyn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::ManifestError: return "ManifestError";
    case ErrorCode::SubsequenceTooShort: return "SubsequenceTooShort";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::EmptyNode: return "EmptyNode";
    case ErrorCode::FeatureLengthMismatch: return "FeatureLengthMismatch";
    case ErrorCode::ModelVersionMismatch: return "ModelVersionMismatch";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MalformedReport: return "MalformedReport";
  }
  return "Unknown";
}

}  // namespace keydyn
