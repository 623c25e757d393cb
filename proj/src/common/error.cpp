#include "consult/common/error.hpp"

namespace consult {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParseError: return "parse_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kTypeError: return "type_error";
    case ErrorCode::kIoError: return "io_error";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kTokenLimit: return "token_limit";
    case ErrorCode::kTranscriptExhausted: return "transcript_exhausted";
    case ErrorCode::kStructuredOutput: return "structured_output";
    case ErrorCode::kHttpStatus: return "http_status";
    case ErrorCode::kFeedParse: return "feed_parse";
    case ErrorCode::kNonPdfPayload: return "non_pdf_payload";
    case ErrorCode::kSourceUnavailable: return "source_unavailable";
    case ErrorCode::kConversionUnavailable: return "conversion_unavailable";
    case ErrorCode::kConversionFailed: return "conversion_failed";
    case ErrorCode::kNoQueries: return "no_queries";
    case ErrorCode::kRetrievalFailed: return "retrieval_failed";
    case ErrorCode::kEmptyShortlist: return "empty_shortlist";
    case ErrorCode::kContextEmpty: return "context_empty";
    case ErrorCode::kRecommendationParse: return "recommendation_parse";
    case ErrorCode::kUnknownTool: return "unknown_tool";
    case ErrorCode::kParamValidation: return "param_validation";
    case ErrorCode::kMetric: return "metric_error";
    case ErrorCode::kIdMisalignment: return "id_misalignment";
    case ErrorCode::kInterrupted: return "interrupted";
  }
  return "unknown";
}

}  // namespace consult
