#include "stable_opinf/error.h"

namespace stable_opinf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDegree: return "invalid-degree";
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kInvalidCluster: return "invalid-cluster";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNonFiniteData: return "non-finite-data";
    case ErrorCode::kNonUniformGrid: return "non-uniform-grid";
    case ErrorCode::kTooFewSnapshots: return "too-few-snapshots";
    case ErrorCode::kDegenerateSpectrum: return "degenerate-spectrum";
    case ErrorCode::kInvalidEpsilon: return "invalid-epsilon";
    case ErrorCode::kMissingQuadratic: return "missing-quadratic";
    case ErrorCode::kProductOutsideBasis: return "product-outside-basis";
    case ErrorCode::kInvalidProblem: return "invalid-problem";
    case ErrorCode::kInvalidMode: return "invalid-mode";
    case ErrorCode::kInferenceFailed: return "inference-failed";
    case ErrorCode::kCertificateInvalid: return "certificate-invalid";
    case ErrorCode::kSingularMass: return "singular-mass";
    case ErrorCode::kUndefinedMetric: return "undefined-metric";
    case ErrorCode::kFomDiverged: return "fom-diverged";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown";
}

}  // namespace stable_opinf
