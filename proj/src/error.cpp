#include "affekt/error.hpp"

namespace affekt {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EdgeOutOfRange: return "EdgeOutOfRange";
    case ErrorKind::InvalidEdges: return "InvalidEdges";
    case ErrorKind::InvalidOrder: return "InvalidOrder";
    case ErrorKind::InvalidRecording: return "InvalidRecording";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::ScaleTooLarge: return "ScaleTooLarge";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::NyquistExceeded: return "NyquistExceeded";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MalformedEvent: return "MalformedEvent";
    case ErrorKind::UnknownEmotionName: return "UnknownEmotionName";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::EmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorKind::BadCheckpoint: return "BadCheckpoint";
    case ErrorKind::RecordingTooShort: return "RecordingTooShort";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace affekt
