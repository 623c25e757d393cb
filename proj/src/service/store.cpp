#include "consult/service/store.hpp"

#include <algorithm>
#include <array>
#include <regex>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"
#include "consult/common/text.hpp"

namespace consult::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown {} '{}'", what, s));
}

constexpr std::array<std::string_view, 3> kKindNames = {"smartfill", "recommendation", "prototype"};
constexpr std::array<std::string_view, 4> kStatusNames = {"queued", "running", "succeeded", "failed"};
constexpr std::array<std::string_view, 4> kStateNames = {"created", "answered", "recommended", "prototyped"};

// Ids become path components.
void check_id(std::string_view id, std::string_view what) {
  static const std::regex ok("[A-Za-z0-9_-]{1,64}");
  if (!std::regex_match(id.begin(), id.end(), ok)) {
    throw Error(ErrorCode::kNotFound, fmt::format("no {} '{}'", what, id));
  }
}

json load_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("corrupt document {}: {}", p.string(), e.what()));
  }
}

}  // namespace

std::string_view to_string(JobKind k) { return kKindNames[static_cast<std::size_t>(k)]; }
JobKind job_kind_from_string(std::string_view s) { return parse_enum<JobKind>(s, kKindNames, "job kind"); }
std::string_view to_string(JobStatus s) { return kStatusNames[static_cast<std::size_t>(s)]; }
JobStatus job_status_from_string(std::string_view s) { return parse_enum<JobStatus>(s, kStatusNames, "job status"); }
std::string_view to_string(SessionState s) { return kStateNames[static_cast<std::size_t>(s)]; }
SessionState session_state_from_string(std::string_view s) {
  return parse_enum<SessionState>(s, kStateNames, "session state");
}

void to_json(json& j, const JobRecord& r) {
  j = {{"job_id", r.job_id},         {"session_id", r.session_id}, {"kind", to_string(r.kind)},
       {"status", to_string(r.status)}, {"reason", r.reason},         {"result_uri", r.result_uri},
       {"request", r.request},       {"created_at", r.created_at}, {"updated_at", r.updated_at}};
}

JobRecord job_from_json(const json& j) {
  JobRecord r;
  r.job_id = j.at("job_id").get<std::string>();
  r.session_id = j.at("session_id").get<std::string>();
  r.kind = job_kind_from_string(j.at("kind").get<std::string>());
  r.status = job_status_from_string(j.at("status").get<std::string>());
  r.reason = j.value("reason", "");
  r.result_uri = j.value("result_uri", "");
  r.request = j.value("request", json::object());
  r.created_at = j.value("created_at", "");
  r.updated_at = j.value("updated_at", "");
  return r;
}

json session_to_json(const Session& s) {
  json answers = questionnaire::answers_to_json(s.answers);
  for (auto& [id, entry] : answers["answers"].items()) {
    const auto it = s.answer_updated_at.find(id);
    entry["updated_at"] = it == s.answer_updated_at.end() ? s.updated_at : it->second;
  }
  return {{"session_id", s.session_id},
          {"state", to_string(s.state)},
          {"answers", answers},
          {"suggestions", s.suggestions},
          {"shortlist", s.shortlist},
          {"recommendation_job", s.recommendation_job ? json(*s.recommendation_job) : json(nullptr)},
          {"prototype_jobs", s.prototype_jobs},
          {"jobs", s.jobs},
          {"created_at", s.created_at},
          {"updated_at", s.updated_at}};
}

Session session_from_json(const json& j, const questionnaire::QuestionnaireSchema& schema) {
  Session s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    s.state = session_state_from_string(j.at("state").get<std::string>());
    s.answers = questionnaire::answers_from_json(j.at("answers"), schema);
    if (j["answers"].contains("answers")) {
      for (const auto& [id, entry] : j["answers"]["answers"].items()) {
        if (entry.is_object() && entry.contains("updated_at")) s.answer_updated_at[id] = entry["updated_at"];
      }
    }
    s.suggestions = j.value("suggestions", json());
    s.shortlist = j.value("shortlist", json());
    if (j.contains("recommendation_job") && j["recommendation_job"].is_string()) {
      s.recommendation_job = j["recommendation_job"].get<std::string>();
    }
    s.prototype_jobs = j.value("prototype_jobs", std::vector<std::string>{});
    s.jobs = j.value("jobs", std::vector<std::string>{});
    s.created_at = j.value("created_at", "");
    s.updated_at = j.value("updated_at", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("malformed session document: {}", e.what()));
  }
  return s;
}

SessionStore::SessionStore(fs::path root, const questionnaire::QuestionnaireSchema& schema)
    : root_(std::move(root)), schema_(schema) {
  fs::create_directories(root_ / "sessions");
}

fs::path SessionStore::session_dir(std::string_view id) const {
  check_id(id, "session");
  return root_ / "sessions" / std::string(id);
}

fs::path SessionStore::artifact_dir(std::string_view session_id, std::string_view job_id) const {
  check_id(job_id, "job");
  return session_dir(session_id) / "artifacts" / std::string(job_id);
}

fs::path SessionStore::job_path(std::string_view session_id, std::string_view job_id) const {
  check_id(job_id, "job");
  return session_dir(session_id) / "jobs" / (std::string(job_id) + ".json");
}

Session SessionStore::create() {
  Session s;
  do {
    s.session_id = random_id().substr(0, 16);
  } while (exists(s.session_id));
  s.created_at = utc_timestamp();
  fs::create_directories(session_dir(s.session_id) / "jobs");
  fs::create_directories(session_dir(s.session_id) / "artifacts");
  save(s);
  return s;
}

bool SessionStore::exists(std::string_view id) const {
  try {
    return fs::exists(session_dir(id) / "session.json");
  } catch (const Error&) {
    return false;
  }
}

Session SessionStore::load(std::string_view id) const {
  if (!exists(id)) throw Error(ErrorCode::kNotFound, fmt::format("no session '{}'", id));
  return session_from_json(load_json(session_dir(id) / "session.json"), schema_);
}

void SessionStore::save(Session& s) const {
  s.updated_at = utc_timestamp();
  write_file_atomic(session_dir(s.session_id) / "session.json", session_to_json(s).dump(2) + "\n");
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root_ / "sessions")) {
    if (fs::exists(e.path() / "session.json")) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

JobRecord SessionStore::load_job(std::string_view session_id, std::string_view job_id) const {
  if (!exists(session_id)) throw Error(ErrorCode::kNotFound, fmt::format("no session '{}'", session_id));
  const auto p = job_path(session_id, job_id);
  if (!fs::exists(p)) throw Error(ErrorCode::kNotFound, fmt::format("no job '{}' in session '{}'", job_id, session_id));
  return job_from_json(load_json(p));
}

void SessionStore::save_job(JobRecord& job) const {
  const auto p = job_path(job.session_id, job.job_id);
  if (fs::exists(p)) {
    const auto stored = job_from_json(load_json(p));
    if (stored.terminal()) {
      throw Error(ErrorCode::kConflict, fmt::format("job '{}' is already {}", job.job_id, to_string(stored.status)));
    }
  }
  job.updated_at = utc_timestamp();
  if (job.created_at.empty()) job.created_at = job.updated_at;
  write_file_atomic(p, json(job).dump(2) + "\n");
}

std::vector<JobRecord> SessionStore::jobs(std::string_view session_id) const {
  std::vector<JobRecord> out;
  const auto dir = session_dir(session_id) / "jobs";
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") out.push_back(job_from_json(load_json(e.path())));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.created_at, a.job_id) < std::tie(b.created_at, b.job_id);
  });
  return out;
}

void SessionStore::append_feedback(std::string_view session_id, const json& entry) const {
  append_line(session_dir(session_id) / "feedback.jsonl", entry.dump());
}

std::size_t SessionStore::recover() const {
  std::size_t count = 0;
  for (const auto& id : list()) {
    const auto jobs_dir = session_dir(id) / "jobs";
    if (!fs::exists(jobs_dir)) continue;
    for (const auto& e : fs::directory_iterator(jobs_dir)) {
      const auto name = e.path().filename().string();
      if (name.find(".tmp.") != std::string::npos) {
        fs::remove(e.path());  // torn atomic write
        continue;
      }
      if (e.path().extension() != ".json") continue;
      auto job = job_from_json(load_json(e.path()));
      if (job.terminal()) continue;
      job.status = JobStatus::kFailed;
      job.reason = std::string(kInterruptedReason);
      job.updated_at = utc_timestamp();
      write_file_atomic(e.path(), json(job).dump(2) + "\n");
      ++count;
    }
  }
  return count;
}

void write_checksum_manifest(const fs::path& dir) {
  json files = json::object();
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != kChecksumManifest) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) files[fs::relative(p, dir).generic_string()] = sha256_hex(read_file(p));
  write_file_atomic(dir / std::string(kChecksumManifest), json{{"files", files}}.dump(2) + "\n");
}

ValidationReport verify_checksum_manifest(const fs::path& dir) {
  ValidationReport report;
  const auto manifest_path = dir / std::string(kChecksumManifest);
  if (!fs::exists(manifest_path)) {
    report.add("missing_manifest", dir.string(), "no checksum manifest");
    return report;
  }
  const auto files = load_json(manifest_path).at("files");
  for (const auto& [rel, digest] : files.items()) {
    const auto p = dir / rel;
    if (!fs::exists(p)) {
      report.add("missing_file", rel, "listed in manifest but absent");
    } else if (sha256_hex(read_file(p)) != digest.get<std::string>()) {
      report.add("checksum_mismatch", rel, "content differs from manifest");
    }
  }
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == kChecksumManifest) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (!files.contains(rel)) report.add("untracked_file", rel, "present but not in manifest");
  }
  return report;
}

}  // namespace consult::service
