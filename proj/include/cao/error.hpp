#pragma once

#include <stdexcept>
#include <string>

namespace cao {

enum class ErrorCode {
  // file / format
  MissingFile,
  MalformedLine,
  UnknownCameraModel,
  BrokenReference,
  IoFailure,
  MissingMask,
  MaskDimensionMismatch,
  InvalidSpec,
  InvalidConfig,
  // data / numerical
  ZeroTotalImages,
  EmptyPointSet,
  EmptyImageSet,
  NoProjectableObservations,
  NegativeDistance,
  NoTumorPoints,
  EvenBlockSize,
  FewerThanFiveClusters,
  DegenerateConfiguration,
  TooFewPoints,
  RankDeficientFootprint,
  TooFewTumorPoints,
  EmptyPlan,
  ZeroTumorArea,
  ZeroTracheaDarkness,
  TooFewTracheaPoints,
  NoCharPoints,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownCameraModel: return "UnknownCameraModel";
    case ErrorCode::BrokenReference: return "BrokenReference";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::MaskDimensionMismatch: return "MaskDimensionMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ZeroTotalImages: return "ZeroTotalImages";
    case ErrorCode::EmptyPointSet: return "EmptyPointSet";
    case ErrorCode::EmptyImageSet: return "EmptyImageSet";
    case ErrorCode::NoProjectableObservations: return "NoProjectableObservations";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::NoTumorPoints: return "NoTumorPoints";
    case ErrorCode::EvenBlockSize: return "EvenBlockSize";
    case ErrorCode::FewerThanFiveClusters: return "FewerThanFiveClusters";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::RankDeficientFootprint: return "RankDeficientFootprint";
    case ErrorCode::TooFewTumorPoints: return "TooFewTumorPoints";
    case ErrorCode::EmptyPlan: return "EmptyPlan";
    case ErrorCode::ZeroTumorArea: return "ZeroTumorArea";
    case ErrorCode::ZeroTracheaDarkness: return "ZeroTracheaDarkness";
    case ErrorCode::TooFewTracheaPoints: return "TooFewTracheaPoints";
    case ErrorCode::NoCharPoints: return "NoCharPoints";
  }
  return "UnknownError";
}

// Process exit classes used by the CLI: 1 usage, 2 input format, 3 numerical.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile:
    case ErrorCode::MalformedLine:
    case ErrorCode::UnknownCameraModel:
    case ErrorCode::BrokenReference:
    case ErrorCode::IoFailure:
    case ErrorCode::MissingMask:
    case ErrorCode::MaskDimensionMismatch:
    case ErrorCode::InvalidSpec:
      return 2;
    case ErrorCode::InvalidConfig:
    case ErrorCode::EvenBlockSize:
      return 1;
    default:
      return 3;
  }
}

}  // namespace cao
