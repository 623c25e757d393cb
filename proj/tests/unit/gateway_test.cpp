#include "consult/llm/gateway.hpp"

#include <httplib.h>

#include <atomic>
#include <thread>

#include <fmt/format.h>
#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "consult/llm/json_schema.hpp"

namespace consult::llm {
namespace {

using ::testing::HasSubstr;
using nlohmann::json;

std::shared_ptr<ScriptedBackend> scripted(std::vector<std::string> texts) {
  return std::shared_ptr<ScriptedBackend>(ScriptedBackend::from_texts(texts));
}

GatewayConfig fast_config() {
  GatewayConfig c;
  c.retry_backoff = std::chrono::milliseconds(0);
  return c;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

TEST(Complete, ScriptedEcho) {
  Gateway gw(scripted({"hello"}), fast_config());
  EXPECT_EQ(gw.complete({.user_text = "anything"}), "hello");
  EXPECT_EQ(gw.audit_size(), 1u);
}

TEST(Complete, SecondCallOnOneEntryTranscriptIsExhausted) {
  Gateway gw(scripted({"hello"}), fast_config());
  gw.complete({.user_text = "a"});
  EXPECT_EQ(code_of([&] { gw.complete({.user_text = "b"}); }), ErrorCode::kTranscriptExhausted);
}

TEST(Complete, TokenLimitCheckedBeforeBackendCall) {
  auto backend = scripted({"never"});
  auto config = fast_config();
  config.token_limit = 10;
  Gateway gw(backend, config);
  EXPECT_EQ(code_of([&] { gw.complete({.user_text = std::string(41, 'x')}); }), ErrorCode::kTokenLimit);
  EXPECT_TRUE(backend->requests().empty());
  EXPECT_EQ(gw.audit_size(), 0u);
  // ceil(40 / 4) == 10 fits exactly.
  EXPECT_EQ(gw.complete({.user_text = std::string(40, 'x')}), "never");
}

TEST(Complete, RejectsTwoPdfAttachments) {
  Gateway gw(scripted({"x"}), fast_config());
  ChatRequest req{.user_text = "u", .attachments = {{"%PDF-a", MediaKind::kPdf}, {"%PDF-b", MediaKind::kPdf}}};
  EXPECT_EQ(code_of([&] { gw.complete(req); }), ErrorCode::kPrecondition);
}

TEST(Complete, TransportFailuresAreRetriedBounded) {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Reply>{
      {"", ErrorCode::kTransport, {}}, {"ok", std::nullopt, {}}});
  Gateway gw(backend, fast_config());
  EXPECT_EQ(gw.complete({.user_text = "u"}), "ok");
  EXPECT_EQ(gw.audit_size(), 2u);

  auto failing = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Reply>(
      5, ScriptedBackend::Reply{"", ErrorCode::kTransport, {}}));
  Gateway gw2(failing, fast_config());
  EXPECT_EQ(code_of([&] { gw2.complete({.user_text = "u"}); }), ErrorCode::kTransport);
  EXPECT_EQ(gw2.audit_size(), 3u);  // 1 + max_transport_retries
}

TEST(Complete, NonTransportFailuresAreNotRetried) {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Reply>{
      {"", ErrorCode::kHttpStatus, {}}, {"unused", std::nullopt, {}}});
  Gateway gw(backend, fast_config());
  EXPECT_EQ(code_of([&] { gw.complete({.user_text = "u"}); }), ErrorCode::kHttpStatus);
  EXPECT_EQ(backend->remaining(), 1u);
}

const json kQueriesSchema = string_list_schema("queries");

TEST(CompleteStructured, DirectParse) {
  Gateway gw(scripted({R"({"queries":["transformer survey"]})"}), fast_config());
  const auto v = gw.complete_structured({.user_text = "q", .output_schema = kQueriesSchema});
  EXPECT_EQ(v["queries"], json::array({"transformer survey"}));
}

TEST(CompleteStructured, FencedBlockGivesSameValue) {
  Gateway gw(scripted({"Here you go:\n```json\n{\"queries\":[\"transformer survey\"]}\n```\nThanks"}),
             fast_config());
  const auto v = gw.complete_structured({.user_text = "q", .output_schema = kQueriesSchema});
  EXPECT_EQ(v, json::parse(R"({"queries":["transformer survey"]})"));
}

TEST(CompleteStructured, GivesUpAfterRepairsWithAllRawResponses) {
  auto backend = scripted({"sorry", "sorry", "sorry", "unused"});
  Gateway gw(backend, fast_config());
  try {
    gw.complete_structured({.user_text = "q", .output_schema = kQueriesSchema}, 2);
    FAIL() << "expected structured-output error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStructuredOutput);
    EXPECT_EQ(e.details(), (std::vector<std::string>{"sorry", "sorry", "sorry"}));
  }
  EXPECT_EQ(backend->requests().size(), 3u);
  EXPECT_EQ(gw.audit_size(), 3u);
  EXPECT_THAT(backend->requests()[1].user_text, HasSubstr("rejected"));
}

TEST(CompleteStructured, RepairsSchemaViolation) {
  auto backend = scripted({R"({"queries": "not a list"})", R"({"queries": ["a"]})"});
  Gateway gw(backend, fast_config());
  const auto v = gw.complete_structured({.user_text = "q", .output_schema = kQueriesSchema});
  EXPECT_EQ(v["queries"].size(), 1u);
  EXPECT_THAT(backend->requests()[1].user_text, HasSubstr("$.queries"));
}

TEST(CompleteStructured, RequiresSchema) {
  Gateway gw(scripted({"{}"}), fast_config());
  EXPECT_EQ(code_of([&] { gw.complete_structured({.user_text = "q"}); }), ErrorCode::kPrecondition);
}

TEST(JsonSchema, ValidatesSubset) {
  const json schema = {
      {"type", "object"},
      {"properties",
       {{"n", {{"type", "integer"}, {"minimum", 1}, {"maximum", 5}}},
        {"tags", {{"type", "array"}, {"items", {{"type", "string"}, {"enum", {"a", "b"}}}}, {"maxItems", 2}}}}},
      {"required", {"n"}},
      {"additionalProperties", false}};
  EXPECT_FALSE(validate_json(schema, json{{"n", 3}, {"tags", {"a"}}}));
  EXPECT_FALSE(validate_json(schema, json{{"n", 3.0}}));
  EXPECT_TRUE(validate_json(schema, json{{"n", 3.5}}));
  EXPECT_TRUE(validate_json(schema, json{{"n", 9}}));
  EXPECT_TRUE(validate_json(schema, json::object()));
  EXPECT_TRUE(validate_json(schema, json{{"n", 1}, {"tags", {"c"}}}));
  EXPECT_TRUE(validate_json(schema, json{{"n", 1}, {"tags", {"a", "b", "a"}}}));
  EXPECT_TRUE(validate_json(schema, json{{"n", 1}, {"extra", 0}}));
}

TEST(ExtractJson, FindsOutermostValueInProse) {
  const auto v = extract_json(R"(Sure! {"a": "has } brace", "b": [1, 2]} trailing)");
  ASSERT_TRUE(v);
  EXPECT_EQ((*v)["a"], "has } brace");
  EXPECT_FALSE(extract_json("no json here"));
  EXPECT_FALSE(extract_json("{ broken"));
}

TEST(Gateway, BoundsInFlightRequests) {
  class Counting : public LlmBackend {
   public:
    std::string send(const ChatRequest&) override {
      const int now = ++active;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      --active;
      return "ok";
    }
    std::string_view kind() const override { return "counting"; }
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
  };
  auto backend = std::make_shared<Counting>();
  Gateway gw(backend, fast_config());
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { gw.complete({.user_text = "x"}); });
  for (auto& t : threads) t.join();
  EXPECT_LE(backend->peak.load(), 2);
  EXPECT_EQ(gw.audit_size(), 8u);
}

TEST(Gateway, AuditLogFileHasOneLinePerRawCall) {
  const auto path = std::filesystem::temp_directory_path() / ("audit_" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(path);
  auto config = fast_config();
  config.audit_log_path = path;
  Gateway gw(scripted({"nope", R"({"queries":[]})"}), config);
  gw.complete_structured({.user_text = "q", .output_schema = kQueriesSchema});
  std::ifstream in(path);
  int lines = 0;
  for (std::string line; std::getline(in, line);) {
    EXPECT_FALSE(json::parse(line).is_discarded());
    ++lines;
  }
  EXPECT_EQ(lines, 2);
  std::filesystem::remove(path);
}

TEST(RemoteBackend, TalksChatCompletionsProtocol) {
  httplib::Server server;
  json seen;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    EXPECT_EQ(req.get_header_value("Authorization"), "Bearer k");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"remote hi"}}]})",
                    "application/json");
  });
  server.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteBackend backend(RemoteConfig{fmt::format("http://127.0.0.1:{}/v1/chat/completions", port), "m", "k"});
  ChatRequest req{.system_text = "sys", .user_text = "hi",
                  .attachments = {{"%PDF-1.4", MediaKind::kPdf}}, .output_schema = kQueriesSchema};
  EXPECT_EQ(backend.send(req), "remote hi");
  EXPECT_EQ(seen["model"], "m");
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][1]["content"][1]["type"], "file");
  EXPECT_EQ(seen["response_format"]["type"], "json_schema");

  RemoteBackend failing(RemoteConfig{fmt::format("http://127.0.0.1:{}/fail", port), "m", ""});
  EXPECT_EQ(code_of([&] { failing.send(req); }), ErrorCode::kHttpStatus);
  server.stop();
  t.join();

  RemoteBackend unreachable(RemoteConfig{fmt::format("http://127.0.0.1:{}/v1/chat/completions", port), "m", ""});
  EXPECT_EQ(code_of([&] { unreachable.send(req); }), ErrorCode::kTransport);
}

}  // namespace
}  // namespace consult::llm
