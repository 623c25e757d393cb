#include "consult/service/service.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "consult/arxiv/transport.hpp"
#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"
#include "consult/common/text.hpp"
#include "consult/recommend/recommendation.hpp"
#include "consult/retrieval/retrieval.hpp"
#include "consult/smartfill/smart_fill.hpp"

namespace consult::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stands in when no model endpoint is configured so read-only commands still work.
class UnconfiguredBackend : public llm::LlmBackend {
 public:
  std::string send(const llm::ChatRequest&) override {
    throw Error(ErrorCode::kPrecondition, "no language model configured (set llm.endpoint and llm.model)");
  }
  std::string_view kind() const override { return "unconfigured"; }
};

}  // namespace

ServiceConfig service_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "service config must be a JSON object");
  ServiceConfig c;
  try {
    c.data_dir = j.value("data_dir", c.data_dir.string());
    c.workers = j.value("workers", c.workers);
    if (j.contains("retrieval")) {
      const auto& r = j["retrieval"];
      c.k_limit = r.value("k_limit", c.k_limit);
      c.n_limit = r.value("n_limit", c.n_limit);
      c.per_query_max = r.value("per_query_max", c.per_query_max);
    }
    if (j.contains("context")) {
      const auto& ctx = j["context"];
      if (ctx.contains("default_strategy")) {
        c.default_strategy = context::strategy_from_string(ctx["default_strategy"].get<std::string>());
      }
      c.context_budget = ctx.value("budget", c.context_budget);
    }
    if (j.contains("schema_path")) c.schema_path = j["schema_path"].get<std::string>();
    if (j.contains("catalog_path")) c.catalog_path = j["catalog_path"].get<std::string>();
    if (j.contains("llm")) c.llm = j["llm"];
    if (j.contains("arxiv")) c.arxiv = j["arxiv"];
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("malformed service config: {}", e.what()));
  }
  if (c.workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be at least 1");
  if (c.k_limit < 1 || c.n_limit < 1 || c.per_query_max < 1) {
    throw Error(ErrorCode::kInvalidArgument, "retrieval limits must be positive");
  }
  return c;
}

ServiceConfig load_service_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("{}: {}", path.string(), e.what()));
  }
  return service_config_from_json(j);
}

Dependencies make_dependencies(const ServiceConfig& config) {
  Dependencies d;
  d.schema = config.schema_path ? questionnaire::load_schema(read_file(*config.schema_path))
                                : questionnaire::default_schema();
  if (config.catalog_path) d.catalog = smartfill::load_catalog(read_file(*config.catalog_path));

  const auto& l = config.llm;
  const auto backend_kind = l.value("backend", "remote");
  std::shared_ptr<llm::LlmBackend> backend;
  if (backend_kind == "scripted") {
    if (!l.contains("transcript")) throw Error(ErrorCode::kInvalidArgument, "llm.transcript is required");
    backend = llm::ScriptedBackend::from_json(json::parse(read_file(l["transcript"].get<std::string>())));
  } else if (backend_kind == "remote") {
    llm::RemoteConfig rc;
    rc.endpoint = l.value("endpoint", "");
    rc.model = l.value("model", "");
    if (rc.endpoint.empty() || rc.model.empty()) {
      backend = std::make_shared<UnconfiguredBackend>();
    }
    const auto env = l.value("api_key_env", std::string(llm::kApiKeyEnvVar));
    if (const char* key = std::getenv(env.c_str())) rc.api_key = key;
    rc.timeout = std::chrono::seconds(l.value("timeout_s", 300));
    if (!backend) backend = std::make_shared<llm::RemoteBackend>(rc);
  } else {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown llm backend '{}'", backend_kind));
  }
  llm::GatewayConfig gc;
  gc.token_limit = l.value("token_limit", gc.token_limit);
  if (l.contains("audit_log")) gc.audit_log_path = l["audit_log"].get<std::string>();
  d.gateway = std::make_shared<llm::Gateway>(backend, gc);

  const auto& a = config.arxiv;
  const auto mode = a.value("mode", "live");
  const auto delay = std::chrono::milliseconds(a.value("polite_delay_ms", 3000));
  auto live = [&] {
    return std::make_shared<arxiv::PoliteTransport>(std::make_shared<arxiv::LiveTransport>(), delay);
  };
  std::shared_ptr<arxiv::HttpTransport> transport;
  if (mode == "live") {
    transport = live();
  } else if (mode == "replay" || mode == "record") {
    if (!a.contains("cassette_dir")) throw Error(ErrorCode::kInvalidArgument, "arxiv.cassette_dir is required");
    const fs::path dir = a["cassette_dir"].get<std::string>();
    transport = mode == "replay"
                    ? std::make_shared<arxiv::CassetteTransport>(dir, arxiv::CassetteTransport::Mode::kReplay)
                    : std::make_shared<arxiv::CassetteTransport>(dir, arxiv::CassetteTransport::Mode::kRecord, live());
  } else {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown arxiv mode '{}'", mode));
  }
  arxiv::ConnectorConfig cc;
  if (mode == "replay") cc.retry_backoff = std::chrono::milliseconds(0);
  std::shared_ptr<arxiv::MarkdownConverter> converter;
  if (a.contains("pdf_converter")) {
    converter = std::make_shared<arxiv::CommandConverter>(a["pdf_converter"].get<std::vector<std::string>>());
  }
  d.papers = std::make_shared<arxiv::ArxivConnector>(transport, cc, converter);
  return d;
}

ConsultService::ConsultService(ServiceConfig config, Dependencies deps)
    : config_(std::move(config)), deps_(std::move(deps)), store_(config_.data_dir, deps_.schema) {
  recovered_ = store_.recover();
  if (recovered_ > 0) spdlog::warn("marked {} interrupted job(s) failed", recovered_);
  for (int i = 0; i < config_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

ConsultService::~ConsultService() {
  {
    std::lock_guard lock(queue_mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& w : workers_) w.join();
}

std::mutex& ConsultService::session_mutex(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto& slot = session_mutexes_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

json ConsultService::create_session() {
  auto s = store_.create();
  return session_to_json(s);
}

json ConsultService::get_session(const std::string& id) {
  std::lock_guard lock(session_mutex(id));
  return session_to_json(store_.load(id));
}

namespace {

std::vector<std::string> report_details(const ValidationReport& r) {
  std::vector<std::string> out;
  for (const auto& f : r.findings) out.push_back(fmt::format("{}: {} ({})", f.subject, f.message, f.code));
  return out;
}

}  // namespace

json ConsultService::save_answers(const std::string& id, const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "answers body must be a JSON object");
  std::lock_guard lock(session_mutex(id));
  auto session = store_.load(id);
  auto updated = session.answers;
  std::vector<std::string> problems;
  std::set<std::string> touched;

  if (body.contains("project_description")) {
    if (!body["project_description"].is_string()) {
      problems.push_back("project_description: must be a string");
    } else {
      updated.project_description = body["project_description"].get<std::string>();
    }
  }
  if (body.contains("answers")) {
    if (!body["answers"].is_object()) {
      problems.push_back("answers: must be an object keyed by question id");
    } else {
      for (const auto& [qid, raw] : body["answers"].items()) {
        const auto* q = deps_.schema.find(qid);
        if (q == nullptr) {
          problems.push_back(fmt::format("{}: unknown question", qid));
          continue;
        }
        if (raw.is_null()) {
          updated.answers.erase(qid);
          touched.insert(qid);
          continue;
        }
        const json& value = raw.is_object() && raw.contains("value") ? raw["value"] : raw;
        const auto typed = questionnaire::value_from_json(value, q->kind);
        if (!typed) {
          problems.push_back(fmt::format("{}: expected a {} value", qid, questionnaire::to_string(q->kind)));
          continue;
        }
        updated.answers[qid] = {qid, *typed, questionnaire::AnswerSource::kUser};
        touched.insert(qid);
      }
    }
  }
  if (body.contains("accepted_suggestions") || body.contains("edits")) {
    const auto accepted_ids = body.value("accepted_suggestions", std::vector<std::string>{});
    std::vector<smartfill::SmartFillSuggestion> accepted;
    std::map<std::string, smartfill::SmartFillSuggestion> latest;
    if (session.suggestions.is_object() && session.suggestions.contains("suggestions")) {
      for (const auto& s : session.suggestions["suggestions"]) {
        auto sug = smartfill::suggestion_from_json(s, deps_.schema);
        latest.emplace(sug.question_id, std::move(sug));
      }
    }
    for (const auto& qid : accepted_ids) {
      const auto it = latest.find(qid);
      if (it == latest.end()) {
        problems.push_back(fmt::format("{}: no pending suggestion", qid));
      } else {
        accepted.push_back(it->second);
      }
    }
    std::map<std::string, questionnaire::AnswerValue> edits;
    const json edit_body = body.value("edits", json::object());
    for (const auto& [qid, raw] : edit_body.items()) {
      const auto* q = deps_.schema.find(qid);
      const auto typed = q ? questionnaire::value_from_json(raw, q->kind) : std::nullopt;
      if (q == nullptr) {
        problems.push_back(fmt::format("{}: unknown question", qid));
      } else if (!typed) {
        problems.push_back(fmt::format("{}: expected a {} value", qid, questionnaire::to_string(q->kind)));
      } else {
        edits.emplace(qid, *typed);
      }
    }
    if (problems.empty()) {
      try {
        updated = smartfill::apply_suggestions(deps_.schema, updated, accepted, edits);
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
      for (const auto& s : accepted) touched.insert(s.question_id);
    }
  }
  // Touched answers must pass every check except completeness.
  for (const auto& f : questionnaire::validate_answers(deps_.schema, updated).findings) {
    if (f.code != "missing_required" && touched.count(f.subject)) {
      problems.push_back(fmt::format("{}: {}", f.subject, f.message));
    }
  }
  if (!problems.empty()) throw Error(ErrorCode::kInvalidArgument, "answers rejected", problems);

  session.answers = std::move(updated);
  const auto now = utc_timestamp();
  for (const auto& qid : touched) {
    if (session.answers.answers.count(qid)) {
      session.answer_updated_at[qid] = now;
    } else {
      session.answer_updated_at.erase(qid);
    }
  }
  if (!session.answers.answers.empty() || !session.answers.project_description.empty()) {
    session.advance(SessionState::kAnswered);
  }
  store_.save(session);
  return session_to_json(session);
}

JobRecord ConsultService::enqueue(const std::string& session_id, JobKind kind, json request,
                                  std::function<std::string(const fs::path&)> run) {
  // Caller holds the session mutex.
  auto session = store_.load(session_id);
  JobRecord job;
  job.job_id = random_id().substr(0, 16);
  job.session_id = session_id;
  job.kind = kind;
  job.request = std::move(request);
  store_.save_job(job);
  session.jobs.push_back(job.job_id);
  if (kind == JobKind::kPrototype) session.prototype_jobs.push_back(job.job_id);
  store_.save(session);
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back({session_id, job.job_id, std::move(run)});
  }
  queue_cv_.notify_one();
  return job;
}

void ConsultService::worker_loop() {
  for (;;) {
    Task task;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    execute(task);
  }
}

void ConsultService::execute(Task& task) {
  const auto out = store_.artifact_dir(task.session_id, task.job_id);
  {
    std::lock_guard lock(session_mutex(task.session_id));
    auto job = store_.load_job(task.session_id, task.job_id);
    if (job.terminal()) return;
    job.status = JobStatus::kRunning;
    store_.save_job(job);
  }
  std::string reason;
  try {
    fs::create_directories(out);
    reason = task.run(out);
  } catch (const Error& e) {
    reason = fmt::format("{}: {}", to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    reason = e.what();
  }
  try {
    write_checksum_manifest(out);
  } catch (const std::exception& e) {
    if (reason.empty()) reason = fmt::format("io_error: {}", e.what());
  }
  std::lock_guard lock(session_mutex(task.session_id));
  auto job = store_.load_job(task.session_id, task.job_id);
  job.status = reason.empty() ? JobStatus::kSucceeded : JobStatus::kFailed;
  job.reason = reason;
  job.result_uri = file_uri(out);
  store_.save_job(job);
  if (!reason.empty()) spdlog::warn("job {} failed: {}", job.job_id, reason);
}

json ConsultService::run_smartfill(const std::string& id) {
  std::lock_guard lock(session_mutex(id));
  const auto session = store_.load(id);
  if (trim(session.answers.project_description).empty()) {
    throw Error(ErrorCode::kPrecondition, "smart fill needs a project description",
                {"project_description: required"});
  }
  return enqueue(id, JobKind::kSmartFill, json::object(),
                 [this, id](const fs::path& out) { return do_smartfill(id, out); });
}

std::string ConsultService::do_smartfill(const std::string& id, const fs::path& out) {
  questionnaire::AnswerSet answers;
  {
    std::lock_guard lock(session_mutex(id));
    answers = store_.load(id).answers;
  }
  const auto result = smartfill::suggest_answers(deps_.schema, answers, deps_.catalog, *deps_.gateway);
  json doc = result;
  doc["job_id"] = out.filename().string();
  write_file_atomic(out / "smartfill.json", doc.dump(2) + "\n");
  std::lock_guard lock(session_mutex(id));
  auto session = store_.load(id);
  session.suggestions = doc;
  store_.save(session);
  return "";
}

json ConsultService::run_recommendation(const std::string& id, const json& body) {
  if (!body.is_object() && !body.is_null()) {
    throw Error(ErrorCode::kInvalidArgument, "recommendation body must be a JSON object");
  }
  const json b = body.is_null() ? json::object() : body;
  std::vector<std::string> problems;
  json params = {{"strategy", context::to_string(config_.default_strategy)},
                 {"k", config_.k_limit},
                 {"n", config_.n_limit},
                 {"full_paper_ids", json::array()},
                 {"force", false}};
  context::Strategy strategy = config_.default_strategy;
  if (b.contains("strategy")) {
    try {
      strategy = context::strategy_from_string(b["strategy"].get<std::string>());
      params["strategy"] = context::to_string(strategy);
    } catch (const std::exception&) {
      problems.push_back("strategy: must be one of abstract_only, full_paper_pdf, full_paper_text, summaries");
    }
  }
  for (const char* key : {"k", "n"}) {
    if (!b.contains(key)) continue;
    const auto& v = b[key];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1 || v.get<std::int64_t>() > 500) {
      problems.push_back(fmt::format("{}: must be an integer in [1, 500]", key));
    } else {
      params[key] = v;
    }
  }
  if (b.contains("full_paper_ids")) {
    if (!b["full_paper_ids"].is_array()) {
      problems.push_back("full_paper_ids: must be an array of arXiv ids");
    } else {
      for (const auto& v : b["full_paper_ids"]) {
        const auto parsed = v.is_string() ? arxiv::ArxivId::parse(v.get<std::string>()) : std::nullopt;
        if (!parsed) {
          problems.push_back(fmt::format("full_paper_ids: '{}' is not an arXiv id", v.dump()));
        } else {
          params["full_paper_ids"].push_back(parsed->canonical());
        }
      }
    }
  }
  const auto n_ids = params["full_paper_ids"].size();
  if (strategy == context::Strategy::kFullPaperPdf && n_ids != 1) {
    problems.push_back("full_paper_ids: full_paper_pdf takes exactly one id");
  } else if (strategy == context::Strategy::kFullPaperText && (n_ids < 1 || n_ids > 2)) {
    problems.push_back("full_paper_ids: full_paper_text takes one or two ids");
  } else if ((strategy == context::Strategy::kAbstractOnly || strategy == context::Strategy::kSummaries) &&
             n_ids != 0) {
    problems.push_back(fmt::format("full_paper_ids: not used by {}", context::to_string(strategy)));
  }
  if (b.contains("force")) {
    if (!b["force"].is_boolean()) {
      problems.push_back("force: must be a boolean");
    } else {
      params["force"] = b["force"];
    }
  }
  if (!problems.empty()) throw Error(ErrorCode::kInvalidArgument, "invalid recommendation parameters", problems);

  std::lock_guard lock(session_mutex(id));
  const auto session = store_.load(id);
  ValidationReport blocking;
  for (const auto& f : questionnaire::validate_answers(deps_.schema, session.answers).findings) {
    if (f.code == "missing_required" && params["force"].get<bool>()) continue;
    blocking.findings.push_back(f);
  }
  if (!blocking.empty()) {
    throw Error(ErrorCode::kPrecondition, "answers do not validate; fix them or pass force for missing answers",
                report_details(blocking));
  }
  for (const auto& j : store_.jobs(id)) {
    if (j.kind == JobKind::kRecommendation && !j.terminal()) {
      throw Error(ErrorCode::kConflict, fmt::format("recommendation job '{}' is still {}", j.job_id, to_string(j.status)));
    }
  }
  return enqueue(id, JobKind::kRecommendation, params,
                 [this, id, params](const fs::path& out) { return do_recommendation(id, params, out); });
}

std::string ConsultService::do_recommendation(const std::string& id, const json& params, const fs::path& out) {
  questionnaire::AnswerSet answers;
  {
    std::lock_guard lock(session_mutex(id));
    answers = store_.load(id).answers;
  }
  auto& gw = *deps_.gateway;
  auto& papers = *deps_.papers;
  const auto qa = questionnaire::format_qa(deps_.schema, answers);
  const auto strategy = context::strategy_from_string(params["strategy"].get<std::string>());

  const auto plan = retrieval::generate_queries(qa, params["k"].get<int>(), gw);
  write_file_atomic(out / "queries.json", json(plan).dump(2) + "\n");
  const auto pool = retrieval::run_searches(plan, config_.per_query_max, papers);
  write_file_atomic(out / "pool.json", json(pool).dump(2) + "\n");
  retrieval::ShortlistOptions so;
  so.n_limit = params["n"].get<int>();
  const auto shortlist = retrieval::shortlist(pool, qa, gw, so);
  write_file_atomic(out / "shortlist.json", json(shortlist).dump(2) + "\n");

  context::ContextOptions co;
  co.budget = config_.context_budget;
  const context::SummaryCache cache(config_.data_dir / "summary_cache");
  co.cache = &cache;
  context::ContextBundle bundle;
  switch (strategy) {
    case context::Strategy::kAbstractOnly:
      bundle = context::build_abstract_context(shortlist.papers, co);
      break;
    case context::Strategy::kSummaries:
      bundle = context::build_summaries_context(shortlist.papers, qa, papers, gw, co);
      break;
    default: {
      std::vector<arxiv::PaperMetadata> chosen;
      for (const auto& raw : params["full_paper_ids"]) {
        const auto pid = arxiv::ArxivId::parse_or_throw(raw.get<std::string>());
        const auto* known = pool.find(pid.base());
        arxiv::PaperMetadata m;
        if (known != nullptr) {
          m = *known;
        } else {
          m.id = pid;
          m.title = pid.canonical();
        }
        chosen.push_back(std::move(m));
      }
      bundle = context::build_fullpaper_context(chosen, strategy, papers, co);
    }
  }
  json ctx = bundle;
  for (auto& block : ctx["blocks"]) block.erase("pdf_base64");
  write_file_atomic(out / "context.json", ctx.dump(2) + "\n");

  const auto raw = recommend::generate(qa, bundle, gw);
  write_file_atomic(out / "raw_recommendation.md", raw);
  auto doc = recommend::parse_recommendation(raw);
  doc.context_strategy = bundle.strategy;
  doc.evidence_ids = bundle.ids();
  recommend::save_recommendation(out, doc);
  write_file_atomic(out / "citation_lint.json", json(recommend::lint_citations(doc)).dump(2) + "\n");

  std::lock_guard lock(session_mutex(id));
  auto session = store_.load(id);
  session.shortlist = shortlist;
  session.recommendation_job = out.filename().string();
  session.advance(SessionState::kRecommended);
  store_.save(session);
  return "";
}

json ConsultService::get_recommendation(const std::string& id) {
  std::string job_id;
  {
    std::lock_guard lock(session_mutex(id));
    const auto session = store_.load(id);
    if (!session.recommendation_job) {
      throw Error(ErrorCode::kNotFound, fmt::format("session '{}' has no recommendation yet", id));
    }
    job_id = *session.recommendation_job;
  }
  const auto doc = recommend::load_recommendation(store_.artifact_dir(id, job_id));
  json out = doc;
  out["job_id"] = job_id;
  out["citation_findings"] = recommend::lint_citations(doc);
  return out;
}

json ConsultService::run_prototype(const std::string& id, const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "prototype body must be a ToolRequest object");
  if (body.contains("output_uri")) {
    throw Error(ErrorCode::kInvalidArgument, "invalid tool request", {"output_uri: assigned by the service"});
  }
  auto request = prototype::tool_request_from_json(body);
  const auto* spec = deps_.tools.find(request.tool_name);
  if (spec == nullptr) {
    std::vector<std::string> names;
    for (const auto& t : deps_.tools.tools()) names.push_back(t.name);
    throw Error(ErrorCode::kUnknownTool, fmt::format("unknown tool '{}'", request.tool_name), names);
  }
  request.hyperparameters = prototype::validate_params(*spec, request.hyperparameters);
  std::error_code ec;
  if (!fs::is_directory(resolve_uri(request.input_uri), ec)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid tool request",
                {fmt::format("input_uri: '{}' is not a directory", request.input_uri)});
  }
  json stored = request;
  stored.erase("output_uri");
  std::lock_guard lock(session_mutex(id));
  store_.load(id);
  // The job id is only known inside enqueue; the task reads it from the artifact path.
  return enqueue(id, JobKind::kPrototype, stored, [this, id, stored](const fs::path& out) {
    return do_prototype(id, out.filename().string(), stored, out);
  });
}

std::string ConsultService::do_prototype(const std::string& id, const std::string& job_id, const json& request,
                                         const fs::path& out) {
  auto req = prototype::tool_request_from_json(request);
  req.output_uri = file_uri(out / "run");
  const auto result = prototype::run_tool(req, deps_.tools, deps_.gateway.get());
  write_file_atomic(out / "result.json", json(result).dump(2) + "\n");
  if (result.status == prototype::RunStatus::kFailed) return "tool run failed: " + result.failure_reason;
  std::lock_guard lock(session_mutex(id));
  auto session = store_.load(id);
  session.advance(SessionState::kPrototyped);
  store_.save(session);
  spdlog::info("prototype job {} finished: {}", job_id, prototype::to_string(result.status));
  return "";
}

json ConsultService::get_job(const std::string& id, const std::string& job_id) {
  std::lock_guard lock(session_mutex(id));
  return store_.load_job(id, job_id);
}

json ConsultService::submit_feedback(const std::string& id, const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "feedback body must be a JSON object");
  std::vector<std::string> problems;
  const json ratings = body.value("ratings", json::object());
  if (!ratings.is_object()) problems.push_back("ratings: must be an object of name -> 1..5");
  if (ratings.is_object()) {
    for (const auto& [name, v] : ratings.items()) {
      if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 5) {
        problems.push_back(fmt::format("ratings.{}: must be an integer from 1 to 5", name));
      }
    }
  }
  if (body.contains("text") && !body["text"].is_string()) problems.push_back("text: must be a string");
  if (problems.empty() && ratings.empty() && body.value("text", "").empty()) {
    problems.push_back("ratings: give at least one rating or some text");
  }
  if (!problems.empty()) throw Error(ErrorCode::kInvalidArgument, "feedback rejected", problems);
  std::lock_guard lock(session_mutex(id));
  store_.load(id);
  const json entry = {{"feedback_id", random_id().substr(0, 16)},
                      {"created_at", utc_timestamp()},
                      {"ratings", ratings},
                      {"text", body.value("text", "")}};
  store_.append_feedback(id, entry);
  return {{"accepted", true}, {"feedback_id", entry["feedback_id"]}};
}

json ConsultService::schema_json() const { return json::parse(questionnaire::serialize_schema(deps_.schema)); }

json ConsultService::tools_json() const { return deps_.tools.tools(); }

json ConsultService::wait_for_job(const std::string& id, const std::string& job_id, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto job = store_.load_job(id, job_id);
    if (job.terminal()) return job;
    if (std::chrono::steady_clock::now() > deadline) {
      throw Error(ErrorCode::kPrecondition, fmt::format("job '{}' still {} after timeout", job_id, to_string(job.status)));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace consult::service
