#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace keydyn {

// Every failure the library reports carries one of these codes. The numeric
// values double as process exit codes for the command-line tool, so they must
// stay distinct and stable.
enum class ErrorCode : int {
  InvalidArgument = 2,
  Io = 3,
  MalformedLine = 10,
  NonMonotonicTimestamps = 11,
  ManifestError = 12,
  SubsequenceTooShort = 20,
  EmptyTrainingSet = 21,
  BadMagic = 22,
  TruncatedFile = 23,
  DimensionMismatch = 24,
  InvalidLabel = 25,
  EmptyNode = 30,
  FeatureLengthMismatch = 31,
  ModelVersionMismatch = 32,
  MalformedModel = 33,
  ClassTooSmall = 40,
  LabelOutOfRange = 41,
  EmptyMatrix = 42,
  LengthMismatch = 43,
  MalformedReport = 44,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace keydyn
