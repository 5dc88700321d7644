#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stable_opinf {

/// Failure categories shared by every module. The CLI maps them onto exit
/// codes and stage tags.
enum class ErrorCode {
  kInvalidDegree,
  kInvalidDimension,
  kInvalidCluster,
  kDimensionMismatch,
  kNonFiniteData,
  kNonUniformGrid,
  kTooFewSnapshots,
  kDegenerateSpectrum,
  kInvalidEpsilon,
  kMissingQuadratic,
  kProductOutsideBasis,
  kInvalidProblem,
  kInvalidMode,
  kInferenceFailed,
  kCertificateInvalid,
  kSingularMass,
  kUndefinedMetric,
  kFomDiverged,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stable_opinf
