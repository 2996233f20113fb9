#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace apbtriage {

// Every declared failure mode across the library. The CLI maps each code to a
// distinct nonzero exit status, so keep the enumeration order stable.
enum class ErrorCode {
  // vcd
  UnknownIdCode,
  WidthMismatch,
  MalformedDirective,
  NonMonotonicTime,
  // apb
  XInPayload,
  ProtocolViolation,
  MissingSignal,
  // faultgen
  MapCoversFullSpace,
  // forest / cascade
  SingleClassInput,
  EmptyPartition,
  VersionMismatch,
  CorruptModel,
  MissingClass,
  // eval
  UnknownLabel,
  LengthMismatch,
  TooFewSamples,
  // cli / io
  IoError,
  BadConfig,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace apbtriage
