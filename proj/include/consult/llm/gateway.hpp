#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/common/error.hpp"

namespace consult::llm {

enum class MediaKind { kPdf, kPlainText };

struct Attachment {
  std::string bytes;
  MediaKind kind = MediaKind::kPdf;
};

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::vector<Attachment> attachments;
  // Free-text output when null; otherwise the JSON schema the reply must match.
  nlohmann::json output_schema;
  std::size_t max_output_tokens = 4096;

  bool structured() const { return !output_schema.is_null(); }
  std::size_t pdf_attachment_count() const;
};

std::size_t estimate_request_tokens(const ChatRequest& request);

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string send(const ChatRequest& request) = 0;
  virtual std::string_view kind() const = 0;
};

// Replays responses strictly in call order; content is never matched.
class ScriptedBackend : public LlmBackend {
 public:
  struct Reply {
    std::string text;
    std::optional<ErrorCode> failure;  // raise instead of replying
    std::chrono::milliseconds delay{0};
  };

  explicit ScriptedBackend(std::vector<Reply> transcript);
  static std::unique_ptr<ScriptedBackend> from_texts(const std::vector<std::string>& texts);
  // {"responses": ["text" | {"text", "delay_ms"} | {"error": "<code>"}]}
  static std::unique_ptr<ScriptedBackend> from_json(const nlohmann::json& doc);

  std::string send(const ChatRequest& request) override;
  std::string_view kind() const override { return "scripted"; }

  std::vector<ChatRequest> requests() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::vector<Reply> transcript_;
  std::size_t next_ = 0;
  std::vector<ChatRequest> requests_;
};

struct RemoteConfig {
  std::string endpoint;  // full chat-completions URL
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{300};
};

// OpenAI-compatible chat-completions backend. PDF attachments travel as
// base64 file parts; structured requests set response_format=json_schema.
class RemoteBackend : public LlmBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  std::string send(const ChatRequest& request) override;
  std::string_view kind() const override { return "remote_api"; }

  nlohmann::json build_payload(const ChatRequest& request) const;

 private:
  RemoteConfig config_;
};

inline constexpr const char* kApiKeyEnvVar = "CONSULT_LLM_API_KEY";

struct GatewayConfig {
  std::size_t token_limit = 200'000;
  std::ptrdiff_t max_in_flight = 2;
  int max_transport_retries = 2;
  std::chrono::milliseconds retry_backoff{500};
  std::optional<std::filesystem::path> audit_log_path;
};

struct AuditEntry {
  std::size_t sequence = 0;
  std::string backend;
  std::string system_text;
  std::string user_text;
  std::size_t attachment_count = 0;
  bool structured = false;
  std::optional<std::string> response;
  std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const AuditEntry& e);

// Single facade for every model call. Thread-safe.
class Gateway {
 public:
  Gateway(std::shared_ptr<LlmBackend> backend, GatewayConfig config = {});

  std::string complete(const ChatRequest& request);

  // Extract -> validate -> re-ask with the error appended, up to
  // max_repair_attempts extra calls. Never returns a non-conforming value.
  nlohmann::json complete_structured(const ChatRequest& request, int max_repair_attempts = 2);

  std::vector<AuditEntry> audit_log() const;
  std::size_t audit_size() const;
  const GatewayConfig& config() const { return config_; }
  LlmBackend& backend() { return *backend_; }

 private:
  void record(AuditEntry entry);

  std::shared_ptr<LlmBackend> backend_;
  GatewayConfig config_;
  std::counting_semaphore<> in_flight_;
  mutable std::mutex audit_mu_;
  std::vector<AuditEntry> audit_;
};

}  // namespace consult::llm
