#include "consult/llm/gateway.hpp"

#include <algorithm>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "consult/common/storage.hpp"
#include "consult/common/text.hpp"
#include "consult/llm/json_schema.hpp"

namespace consult::llm {

using nlohmann::json;

std::size_t ChatRequest::pdf_attachment_count() const {
  return static_cast<std::size_t>(std::count_if(attachments.begin(), attachments.end(),
                                                [](const Attachment& a) { return a.kind == MediaKind::kPdf; }));
}

std::size_t estimate_request_tokens(const ChatRequest& request) {
  std::size_t total = estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
  for (const auto& a : request.attachments) total += estimate_tokens_for_bytes(a.bytes.size());
  return total;
}

// ----- scripted -----

ScriptedBackend::ScriptedBackend(std::vector<Reply> transcript) : transcript_(std::move(transcript)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_texts(const std::vector<std::string>& texts) {
  std::vector<Reply> replies;
  for (const auto& t : texts) replies.push_back({t, std::nullopt, {}});
  return std::make_unique<ScriptedBackend>(std::move(replies));
}

namespace {

ErrorCode error_code_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kInterrupted); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == s) return code;
  }
  throw Error(ErrorCode::kParseError, fmt::format("unknown error code '{}' in transcript", s));
}

}  // namespace

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("responses") || !doc["responses"].is_array()) {
    throw Error(ErrorCode::kParseError, "transcript must be an object with a 'responses' array");
  }
  std::vector<Reply> replies;
  for (const auto& r : doc["responses"]) {
    Reply reply;
    if (r.is_string()) {
      reply.text = r.get<std::string>();
    } else if (r.is_object()) {
      reply.text = r.value("text", "");
      reply.delay = std::chrono::milliseconds(r.value("delay_ms", 0));
      if (r.contains("error")) reply.failure = error_code_from_string(r["error"].get<std::string>());
    } else {
      throw Error(ErrorCode::kParseError, "transcript entries must be strings or objects");
    }
    replies.push_back(std::move(reply));
  }
  return std::make_unique<ScriptedBackend>(std::move(replies));
}

std::string ScriptedBackend::send(const ChatRequest& request) {
  Reply reply;
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    if (next_ >= transcript_.size()) {
      throw Error(ErrorCode::kTranscriptExhausted,
                  fmt::format("scripted transcript exhausted after {} responses", transcript_.size()));
    }
    reply = transcript_[next_++];
  }
  if (reply.delay.count() > 0) std::this_thread::sleep_for(reply.delay);
  if (reply.failure) throw Error(*reply.failure, "scripted failure");
  return reply.text;
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mu_);
  return transcript_.size() - next_;
}

// ----- gateway -----

void to_json(json& j, const AuditEntry& e) {
  j = {{"sequence", e.sequence}, {"backend", e.backend}, {"system_text", e.system_text},
       {"user_text", e.user_text}, {"attachment_count", e.attachment_count},
       {"structured", e.structured}};
  if (e.response) j["response"] = *e.response;
  if (e.error) j["error"] = *e.error;
}

Gateway::Gateway(std::shared_ptr<LlmBackend> backend, GatewayConfig config)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      in_flight_(std::max<std::ptrdiff_t>(1, config_.max_in_flight)) {
  if (!backend_) throw Error(ErrorCode::kInvalidArgument, "gateway requires a backend");
}

void Gateway::record(AuditEntry entry) {
  std::lock_guard lock(audit_mu_);
  entry.sequence = audit_.size();
  if (config_.audit_log_path) append_line(*config_.audit_log_path, json(entry).dump());
  audit_.push_back(std::move(entry));
}

std::string Gateway::complete(const ChatRequest& request) {
  if (request.pdf_attachment_count() > 1) {
    throw Error(ErrorCode::kPrecondition, "at most one PDF attachment per request");
  }
  const auto estimate = estimate_request_tokens(request);
  if (estimate > config_.token_limit) {
    throw Error(ErrorCode::kTokenLimit,
                fmt::format("request needs ~{} tokens, limit is {}", estimate, config_.token_limit));
  }

  for (int attempt = 0;; ++attempt) {
    AuditEntry entry{0, std::string(backend_->kind()), request.system_text, request.user_text,
                     request.attachments.size(), request.structured(),
                     std::nullopt, std::nullopt};
    try {
      in_flight_.acquire();
      std::string text;
      try {
        text = backend_->send(request);
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
      entry.response = text;
      record(std::move(entry));
      return text;
    } catch (const Error& e) {
      entry.error = fmt::format("{}: {}", to_string(e.code()), e.what());
      record(std::move(entry));
      if (!e.retryable() || attempt >= config_.max_transport_retries) throw;
      spdlog::warn("llm transport failure (attempt {}): {}", attempt + 1, e.what());
      std::this_thread::sleep_for(config_.retry_backoff * (attempt + 1));
    }
  }
}

json Gateway::complete_structured(const ChatRequest& request, int max_repair_attempts) {
  if (!request.structured()) {
    throw Error(ErrorCode::kPrecondition, "complete_structured requires an output schema");
  }
  const auto& schema = request.output_schema;
  ChatRequest current = request;
  current.user_text = request.user_text +
                      "\n\nRespond only with a JSON value that conforms to this JSON Schema:\n" +
                      schema.dump();
  const std::string base_text = current.user_text;

  std::vector<std::string> raws;
  for (int attempt = 0; attempt <= max_repair_attempts; ++attempt) {
    const auto raw = complete(current);
    raws.push_back(raw);
    std::string problem;
    if (auto parsed = extract_json(raw)) {
      auto violation = validate_json(schema, *parsed);
      if (!violation) return *parsed;
      problem = *violation;
    } else {
      problem = "the response did not contain a parseable JSON value";
    }
    current.user_text = base_text + "\n\nYour previous response was rejected (" + problem +
                        "). Reply again with only the corrected JSON value.";
  }
  throw Error(ErrorCode::kStructuredOutput,
              fmt::format("no schema-conforming output after {} attempts", raws.size()), raws);
}

std::vector<AuditEntry> Gateway::audit_log() const {
  std::lock_guard lock(audit_mu_);
  return audit_;
}

std::size_t Gateway::audit_size() const {
  std::lock_guard lock(audit_mu_);
  return audit_.size();
}

}  // namespace consult::llm
