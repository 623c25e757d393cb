#include <fmt/format.h>

#include "consult/common/http.hpp"
#include "consult/common/text.hpp"
#include "consult/llm/gateway.hpp"

namespace consult::llm {

using nlohmann::json;

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "remote backend needs an endpoint");
}

json RemoteBackend::build_payload(const ChatRequest& request) const {
  json content = json::array({{{"type", "text"}, {"text", request.user_text}}});
  for (std::size_t i = 0; i < request.attachments.size(); ++i) {
    const auto& a = request.attachments[i];
    if (a.kind == MediaKind::kPdf) {
      content.push_back({{"type", "file"},
                         {"file", {{"filename", fmt::format("attachment{}.pdf", i)},
                                   {"file_data", "data:application/pdf;base64," + base64_encode(a.bytes)}}}});
    } else {
      content.push_back({{"type", "text"}, {"text", a.bytes}});
    }
  }
  json messages = json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", std::move(content)}});

  json payload = {{"model", config_.model},
                  {"max_tokens", request.max_output_tokens},
                  {"messages", std::move(messages)}};
  if (request.structured()) {
    payload["response_format"] = {
        {"type", "json_schema"},
        {"json_schema", {{"name", "structured_output"}, {"schema", request.output_schema}}}};
  }
  return payload;
}

std::string RemoteBackend::send(const ChatRequest& request) {
  HttpOptions options;
  options.timeout = config_.timeout;
  if (!config_.api_key.empty()) options.headers["Authorization"] = "Bearer " + config_.api_key;
  const auto response =
      http_post(config_.endpoint, build_payload(request).dump(), "application/json", options);
  if (response.status == 429 || response.status >= 500) {
    throw Error(ErrorCode::kTransport, fmt::format("LLM endpoint returned HTTP {}", response.status));
  }
  if (response.status != 200) {
    throw Error(ErrorCode::kHttpStatus, fmt::format("LLM endpoint returned HTTP {}", response.status),
                {std::to_string(response.status), response.body.substr(0, 2000)});
  }
  const auto body = json::parse(response.body, nullptr, false);
  if (body.is_discarded() || !body.contains("choices") || body["choices"].empty()) {
    throw Error(ErrorCode::kParseError, "unexpected LLM endpoint response shape");
  }
  const auto& message = body["choices"][0]["message"];
  return message.value("content", "");
}

}  // namespace consult::llm
