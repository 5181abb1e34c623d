#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prefalign {

// Machine-readable failure classes. Every failure raised by the library maps
// to exactly one code; the gateway translates codes to HTTP statuses.
enum class ErrorCode {
  kInvalidArgument,
  kInvalidImage,
  kOversizeImage,
  kTransport,
  kMalformedResponse,
  kMissingEntity,
  kParseError,
  kUnknownFixture,
  kShapeMismatch,
  kDegenerateRegion,
  kLengthMismatch,
  kLambdaOutOfRange,
  kBackendFailure,
  kUnknownEntity,
  kDuplicateEntity,
  kInvalidRegion,
  kSchemaVersionMismatch,
  kCorruptPayload,
  kNotFound,
  kConflict,
  kIo,
};

std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string raw_text = {})
      : std::runtime_error(message), code_(code), raw_text_(std::move(raw_text)) {}

  ErrorCode code() const noexcept { return code_; }

  // Raw MLLM output attached to MalformedResponse / ParseError failures.
  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  ErrorCode code_;
  std::string raw_text_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::string raw_text = {}) {
  throw Error(code, message, std::move(raw_text));
}

}  // namespace prefalign
