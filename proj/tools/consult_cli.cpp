// consult: command-line front end over the consulting service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"
#include "consult/data/template.hpp"
#include "consult/service/server.hpp"
#include "consult/service/service.hpp"

namespace {

using consult::Error;
using consult::ErrorCode;
using nlohmann::json;
namespace fs = std::filesystem;
namespace svc = consult::service;

struct Globals {
  std::string config;
  std::string data_dir;
  std::string cassette_dir;
  std::string transcript;
  bool verbose = false;
};

svc::ServiceConfig load_config(const Globals& g) {
  auto c = g.config.empty() ? svc::ServiceConfig{} : svc::load_service_config(g.config);
  if (!g.data_dir.empty()) c.data_dir = g.data_dir;
  if (!g.cassette_dir.empty()) c.arxiv = {{"mode", "replay"}, {"cassette_dir", g.cassette_dir}};
  if (!g.transcript.empty()) c.llm = {{"backend", "scripted"}, {"transcript", g.transcript}};
  return c;
}

json read_json_arg(const std::string& path) {
  std::string text;
  if (path == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), {});
  } else {
    text = consult::read_file(path);
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("{} is not valid JSON", path), {e.what()});
  }
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

int job_exit(const json& job) { return job.at("status") == "succeeded" ? 0 : 1; }

json validate_data(const std::string& path, const std::string& task_name) {
  const auto task = consult::data::task_kind_from_string(task_name);
  std::vector<std::pair<fs::path, consult::data::SplitRole>> files;
  if (fs::is_directory(path)) {
    for (auto role : {consult::data::SplitRole::kTrain, consult::data::SplitRole::kValidation,
                      consult::data::SplitRole::kTest}) {
      const auto p = fs::path(path) / consult::data::split_file_name(role);
      if (fs::exists(p)) files.emplace_back(p, role);
    }
    if (files.empty()) throw Error(ErrorCode::kNotFound, fmt::format("no split files under {}", path));
  } else {
    auto role = consult::data::SplitRole::kTrain;
    try {
      role = consult::data::split_role_from_string(fs::path(path).stem().string());
    } catch (const Error&) {
    }
    files.emplace_back(path, role);
  }
  json out = {{"task", task_name}, {"ok", true}, {"files", json::array()}};
  for (const auto& [p, role] : files) {
    const auto parsed = consult::data::parse_jsonl_uri(consult::file_uri(fs::absolute(p)), role);
    const auto report = consult::data::validate_for_task(parsed.split, task);
    const bool ok = parsed.violations.empty() && report.empty();
    out["ok"] = out["ok"].get<bool>() && ok;
    out["files"].push_back({{"path", p.string()},
                            {"split", consult::data::to_string(role)},
                            {"total_lines", parsed.total_lines},
                            {"blank_lines", parsed.blank_lines},
                            {"valid_records", parsed.split.records.size()},
                            {"violations", parsed.violations},
                            {"findings", report.findings}});
  }
  return out;
}

consult::service::HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Research-consulting assistant: questionnaire, literature-grounded recommendations, prototypes."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Service config JSON");
  app.add_option("--data-dir", g.data_dir, "Session store directory (overrides config)");
  app.add_option("--cassette-dir", g.cassette_dir, "Replay arXiv traffic from this cassette directory");
  app.add_option("--transcript", g.transcript, "Scripted model transcript JSON instead of a live model");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  std::string session_id, job_id, file, strategy;
  int k = 0, n = 0;
  std::vector<std::string> paper_ids;
  bool force = false, markdown = false;

  auto* schema_cmd = app.add_subcommand("schema", "Print the questionnaire schema");
  auto* tools_cmd = app.add_subcommand("tools", "List prototype tools");

  std::string data_path, task;
  auto* validate_cmd = app.add_subcommand("validate-data", "Check a JSONL file or split directory");
  validate_cmd->add_option("path", data_path, "File or directory with train/validation/test .jsonl")->required();
  validate_cmd->add_option("--task", task, "regression | binary_classification | multiclass_classification | text_generation")
      ->required();

  auto* create_cmd = app.add_subcommand("create-session", "Start a session");
  auto* get_cmd = app.add_subcommand("get-session", "Show a session");
  get_cmd->add_option("session", session_id)->required();
  auto* answers_cmd = app.add_subcommand("save-answers", "Merge answers into a session");
  answers_cmd->add_option("session", session_id)->required();
  answers_cmd->add_option("--file", file, "JSON body ('-' for stdin)")->required();
  auto* smartfill_cmd = app.add_subcommand("smartfill", "Propose answers and wait for the job");
  smartfill_cmd->add_option("session", session_id)->required();
  auto* rec_cmd = app.add_subcommand("recommend", "Run the recommendation pipeline and wait for the job");
  rec_cmd->add_option("session", session_id)->required();
  rec_cmd->add_option("--strategy", strategy, "abstract_only | full_paper_pdf | full_paper_text | summaries");
  rec_cmd->add_option("--k", k, "Query limit");
  rec_cmd->add_option("--n", n, "Shortlist limit");
  rec_cmd->add_option("--paper-id", paper_ids, "Paper for the full-paper strategies (repeatable)");
  rec_cmd->add_flag("--force", force, "Allow missing required answers");
  auto* get_rec_cmd = app.add_subcommand("get-recommendation", "Show the latest recommendation");
  get_rec_cmd->add_option("session", session_id)->required();
  get_rec_cmd->add_flag("--markdown", markdown, "Print the raw markdown");
  auto* proto_cmd = app.add_subcommand("prototype", "Run a prototype tool and wait for the job");
  proto_cmd->add_option("session", session_id)->required();
  proto_cmd->add_option("--request", file, "ToolRequest JSON ('-' for stdin)")->required();
  auto* job_cmd = app.add_subcommand("get-job", "Show a job record");
  job_cmd->add_option("session", session_id)->required();
  job_cmd->add_option("job", job_id)->required();
  auto* feedback_cmd = app.add_subcommand("feedback", "Submit survey feedback");
  feedback_cmd->add_option("session", session_id)->required();
  feedback_cmd->add_option("--file", file, "JSON body ('-' for stdin)")->required();

  std::string host = "127.0.0.1", port_file;
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port, "0 picks a free port");
  serve_cmd->add_option("--port-file", port_file, "Write the bound port here once listening");

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("consult");
  spdlog::set_default_logger(logger);
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*validate_cmd) {
      const auto report = validate_data(data_path, task);
      print(report);
      return report["ok"].get<bool>() ? 0 : 1;
    }
    const auto config = load_config(g);
    if (*schema_cmd && g.config.empty()) {
      std::cout << consult::questionnaire::default_schema_document();
      return 0;
    }
    svc::ConsultService service(config, svc::make_dependencies(config));
    if (*schema_cmd) {
      print(service.schema_json());
    } else if (*tools_cmd) {
      print(service.tools_json());
    } else if (*create_cmd) {
      print(service.create_session());
    } else if (*get_cmd) {
      print(service.get_session(session_id));
    } else if (*answers_cmd) {
      print(service.save_answers(session_id, read_json_arg(file)));
    } else if (*smartfill_cmd) {
      const auto job = service.run_smartfill(session_id);
      const auto done = service.wait_for_job(session_id, job["job_id"]);
      print(done);
      return job_exit(done);
    } else if (*rec_cmd) {
      json body = json::object();
      if (!strategy.empty()) body["strategy"] = strategy;
      if (k > 0) body["k"] = k;
      if (n > 0) body["n"] = n;
      if (!paper_ids.empty()) body["full_paper_ids"] = paper_ids;
      if (force) body["force"] = true;
      const auto job = service.run_recommendation(session_id, body);
      const auto done = service.wait_for_job(session_id, job["job_id"]);
      print(done);
      return job_exit(done);
    } else if (*get_rec_cmd) {
      const auto doc = service.get_recommendation(session_id);
      if (markdown) {
        std::cout << doc.at("raw_markdown").get<std::string>();
      } else {
        print(doc);
      }
    } else if (*proto_cmd) {
      const auto job = service.run_prototype(session_id, read_json_arg(file));
      const auto done = service.wait_for_job(session_id, job["job_id"]);
      print(done);
      return job_exit(done);
    } else if (*job_cmd) {
      print(service.get_job(session_id, job_id));
    } else if (*feedback_cmd) {
      print(service.submit_feedback(session_id, read_json_arg(file)));
    } else if (*serve_cmd) {
      svc::HttpServer server(service);
      const int bound = server.bind(host, port);
      if (!port_file.empty()) consult::write_file_atomic(port_file, std::to_string(bound) + "\n");
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << fmt::format("serving on http://{}:{}\n", host, bound);
      server.listen();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << svc::error_body(e).dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
