#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/common/report.hpp"
#include "consult/questionnaire/schema.hpp"

namespace consult::service {

enum class JobKind { kSmartFill, kRecommendation, kPrototype };
std::string_view to_string(JobKind k);
JobKind job_kind_from_string(std::string_view s);

enum class JobStatus { kQueued, kRunning, kSucceeded, kFailed };
std::string_view to_string(JobStatus s);
JobStatus job_status_from_string(std::string_view s);

inline constexpr std::string_view kInterruptedReason = "interrupted";

struct JobRecord {
  std::string job_id;
  std::string session_id;
  JobKind kind = JobKind::kSmartFill;
  JobStatus status = JobStatus::kQueued;
  std::string reason;      // failed only
  std::string result_uri;  // artifact directory
  nlohmann::json request = nlohmann::json::object();
  std::string created_at;
  std::string updated_at;

  bool terminal() const { return status == JobStatus::kSucceeded || status == JobStatus::kFailed; }
};

void to_json(nlohmann::json& j, const JobRecord& r);
JobRecord job_from_json(const nlohmann::json& j);

// Ordered stages; a session's state is the furthest stage reached.
enum class SessionState { kCreated, kAnswered, kRecommended, kPrototyped };
std::string_view to_string(SessionState s);
SessionState session_state_from_string(std::string_view s);

struct Session {
  std::string session_id;
  SessionState state = SessionState::kCreated;
  questionnaire::AnswerSet answers;
  std::map<std::string, std::string> answer_updated_at;
  nlohmann::json suggestions;  // latest smart-fill result, null when none
  nlohmann::json shortlist;    // latest shortlist, null when none
  std::optional<std::string> recommendation_job;
  std::vector<std::string> prototype_jobs;
  std::vector<std::string> jobs;  // every job in submission order
  std::string created_at;
  std::string updated_at;

  void advance(SessionState to) {
    if (to > state) state = to;
  }
};

nlohmann::json session_to_json(const Session& s);
Session session_from_json(const nlohmann::json& j, const questionnaire::QuestionnaireSchema& schema);

// Layout under root:
//   sessions/<id>/session.json
//   sessions/<id>/jobs/<job_id>.json
//   sessions/<id>/artifacts/<job_id>/...
//   sessions/<id>/feedback.jsonl
// Every JSON document is replaced atomically. Not synchronized; callers
// serialize access per session.
class SessionStore {
 public:
  SessionStore(std::filesystem::path root, const questionnaire::QuestionnaireSchema& schema);

  Session create();
  bool exists(std::string_view session_id) const;
  Session load(std::string_view session_id) const;  // kNotFound
  void save(Session& session) const;                 // stamps updated_at
  std::vector<std::string> list() const;

  JobRecord load_job(std::string_view session_id, std::string_view job_id) const;  // kNotFound
  // kConflict when the stored record is already terminal.
  void save_job(JobRecord& job) const;
  std::vector<JobRecord> jobs(std::string_view session_id) const;

  void append_feedback(std::string_view session_id, const nlohmann::json& entry) const;

  // Marks every queued or running job failed(interrupted). Returns the count.
  std::size_t recover() const;

  std::filesystem::path session_dir(std::string_view session_id) const;
  std::filesystem::path artifact_dir(std::string_view session_id, std::string_view job_id) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path job_path(std::string_view session_id, std::string_view job_id) const;

  std::filesystem::path root_;
  const questionnaire::QuestionnaireSchema& schema_;
};

inline constexpr std::string_view kChecksumManifest = "checksums.json";

// {"files": {"<relative path>": "<sha256>"}} over every other file in dir.
void write_checksum_manifest(const std::filesystem::path& dir);
// Findings: missing_manifest, missing_file, checksum_mismatch, untracked_file.
ValidationReport verify_checksum_manifest(const std::filesystem::path& dir);

}  // namespace consult::service
