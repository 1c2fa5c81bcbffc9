#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dhmgen {

enum class ErrorCode {
  SyntaxError,
  UnknownKey,
  DuplicateLayerName,
  MissingRequiredField,
  UnsupportedLayer,
  BlockOrder,
  ShapeUnderflow,
  ChannelMismatch,
  BadMagic,
  SizeMismatch,
  TruncatedFile,
  BadValue,
  EmptyWeights,
  OutOfRange,
  AccumulatorTooWide,
  UnsupportedActor,
  GraphMismatch,
  ShapeMismatch,
  DeadlockDetected,
  OverflowDetected,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Domain error raised by every pipeline stage. The message already carries
/// whatever location context (file, line, column, block) is known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dhmgen
