#include "prefalign/error.hpp"

namespace prefalign {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInvalidImage: return "invalid_image";
    case ErrorCode::kOversizeImage: return "oversize_image";
    case ErrorCode::kTransport: return "mllm_transport";
    case ErrorCode::kMalformedResponse: return "malformed_response";
    case ErrorCode::kMissingEntity: return "missing_entity";
    case ErrorCode::kParseError: return "parse_error";
    case ErrorCode::kUnknownFixture: return "unknown_fixture";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kDegenerateRegion: return "degenerate_region";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kLambdaOutOfRange: return "lambda_out_of_range";
    case ErrorCode::kBackendFailure: return "backend_failure";
    case ErrorCode::kUnknownEntity: return "unknown_entity";
    case ErrorCode::kDuplicateEntity: return "duplicate_entity";
    case ErrorCode::kInvalidRegion: return "invalid_region";
    case ErrorCode::kSchemaVersionMismatch: return "schema_version_mismatch";
    case ErrorCode::kCorruptPayload: return "corrupt_payload";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace prefalign
