#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/arxiv/connector.hpp"
#include "consult/context/context.hpp"
#include "consult/llm/gateway.hpp"
#include "consult/prototype/tools.hpp"
#include "consult/questionnaire/schema.hpp"
#include "consult/service/store.hpp"
#include "consult/smartfill/catalog.hpp"

namespace consult::service {

struct ServiceConfig {
  std::filesystem::path data_dir = "consult-data";
  int workers = 2;
  int k_limit = 50;
  int n_limit = 50;
  int per_query_max = 10;
  context::Strategy default_strategy = context::Strategy::kSummaries;
  std::size_t context_budget = context::kDefaultBudget;
  std::optional<std::filesystem::path> schema_path;
  std::optional<std::filesystem::path> catalog_path;
  // {"backend": "remote", "endpoint", "model", "api_key_env", "token_limit"}
  // or {"backend": "scripted", "transcript": "<file>"}
  nlohmann::json llm = {{"backend", "remote"}};
  // {"mode": "live" | "replay" | "record", "cassette_dir", "polite_delay_ms"}
  nlohmann::json arxiv = {{"mode", "live"}};
};

ServiceConfig service_config_from_json(const nlohmann::json& j);
ServiceConfig load_service_config(const std::filesystem::path& path);

struct Dependencies {
  std::shared_ptr<llm::Gateway> gateway;
  std::shared_ptr<arxiv::PaperSource> papers;
  questionnaire::QuestionnaireSchema schema;
  std::vector<smartfill::DatasetCatalogEntry> catalog;
  prototype::ToolRegistry tools = prototype::ToolRegistry::with_builtin_tools();
};

// Builds the gateway and paper source the config names.
Dependencies make_dependencies(const ServiceConfig& config);

// Every operation returns the JSON the HTTP API serves. Errors are
// consult::Error; the server maps codes onto statuses.
class ConsultService {
 public:
  ConsultService(ServiceConfig config, Dependencies deps);
  ~ConsultService();
  ConsultService(const ConsultService&) = delete;
  ConsultService& operator=(const ConsultService&) = delete;

  nlohmann::json create_session();
  nlohmann::json get_session(const std::string& session_id);
  // {"project_description"?, "answers"?: {id: value | null},
  //  "accepted_suggestions"?: [id], "edits"?: {id: value}}
  nlohmann::json save_answers(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json run_smartfill(const std::string& session_id);
  // {"strategy"?, "k"?, "n"?, "full_paper_ids"?, "force"?}
  nlohmann::json run_recommendation(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json get_recommendation(const std::string& session_id);
  // A ToolRequest without output_uri; the job owns its output directory.
  nlohmann::json run_prototype(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json get_job(const std::string& session_id, const std::string& job_id);
  // {"ratings": {name: 1..5}, "text"?}
  nlohmann::json submit_feedback(const std::string& session_id, const nlohmann::json& body);

  nlohmann::json schema_json() const;
  nlohmann::json tools_json() const;

  // Polls until the job is terminal; kPrecondition on timeout.
  nlohmann::json wait_for_job(const std::string& session_id, const std::string& job_id,
                              std::chrono::milliseconds timeout = std::chrono::minutes(30));

  std::size_t recovered_jobs() const { return recovered_; }
  const SessionStore& store() const { return store_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Task {
    std::string session_id;
    std::string job_id;
    std::function<std::string(const std::filesystem::path&)> run;  // returns a failure reason or ""
  };

  std::mutex& session_mutex(const std::string& session_id);
  JobRecord enqueue(const std::string& session_id, JobKind kind, nlohmann::json request,
                    std::function<std::string(const std::filesystem::path&)> run);
  void worker_loop();
  void execute(Task& task);

  std::string do_smartfill(const std::string& session_id, const std::filesystem::path& out);
  std::string do_recommendation(const std::string& session_id, const nlohmann::json& params,
                                const std::filesystem::path& out);
  std::string do_prototype(const std::string& session_id, const std::string& job_id,
                           const nlohmann::json& request, const std::filesystem::path& out);

  ServiceConfig config_;
  Dependencies deps_;
  SessionStore store_;
  std::size_t recovered_ = 0;

  std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> session_mutexes_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Task> queue_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace consult::service
