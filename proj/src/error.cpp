#include "dhmgen/error.hpp"

namespace dhmgen {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::DuplicateLayerName: return "DuplicateLayerName";
    case ErrorCode::MissingRequiredField: return "MissingRequiredField";
    case ErrorCode::UnsupportedLayer: return "UnsupportedLayer";
    case ErrorCode::BlockOrder: return "BlockOrder";
    case ErrorCode::ShapeUnderflow: return "ShapeUnderflow";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::EmptyWeights: return "EmptyWeights";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::AccumulatorTooWide: return "AccumulatorTooWide";
    case ErrorCode::UnsupportedActor: return "UnsupportedActor";
    case ErrorCode::GraphMismatch: return "GraphMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DeadlockDetected: return "DeadlockDetected";
    case ErrorCode::OverflowDetected: return "OverflowDetected";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace dhmgen
