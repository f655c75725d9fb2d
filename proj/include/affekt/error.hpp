#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace affekt {

enum class ErrorKind {
  // core-signal
  EdgeOutOfRange,
  InvalidEdges,
  InvalidOrder,
  InvalidRecording,
  // entropy
  SeriesTooShort,
  ScaleTooLarge,
  InvalidParams,
  // features
  WindowTooShort,
  NyquistExceeded,
  // dataset
  MissingFile,
  ShapeMismatch,
  MalformedEvent,
  UnknownEmotionName,
  ClassTooSmall,
  EmptyClass,
  // model
  NonFiniteActivation,
  NonFiniteGradient,
  NonFiniteLoss,
  EmptyEvaluationSet,
  BadCheckpoint,
  // pipeline
  RecordingTooShort,
  MissingInput,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace affekt
