#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace consult {

enum class ErrorCode {
  kInvalidArgument,
  kParseError,
  kNotFound,
  kConflict,
  kPrecondition,
  kTypeError,
  kIoError,
  // llm-gateway
  kTransport,
  kTokenLimit,
  kTranscriptExhausted,
  kStructuredOutput,
  // arxiv-connector
  kHttpStatus,
  kFeedParse,
  kNonPdfPayload,
  kSourceUnavailable,
  kConversionUnavailable,
  kConversionFailed,
  // evidence-retrieval / context
  kNoQueries,
  kRetrievalFailed,
  kEmptyShortlist,
  kContextEmpty,
  // recommender
  kRecommendationParse,
  // prototype-builder
  kUnknownTool,
  kParamValidation,
  kMetric,
  kIdMisalignment,
  kInterrupted,
};

std::string_view to_string(ErrorCode code);

// Errors carry a machine-readable code plus optional per-field details. The
// HTTP layer renders them verbatim as {code, message, details[]}.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

  // Transport failures are the only class the gateway/connector retry.
  bool retryable() const noexcept { return code_ == ErrorCode::kTransport; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace consult
