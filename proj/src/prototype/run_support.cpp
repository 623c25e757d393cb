#include "run_support.hpp"

#include <map>
#include <set>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"

namespace consult::prototype::detail {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> feature_kinds(const data::DatasetSplit& split) {
  std::map<std::string, std::string> out;
  for (const auto& r : split.records) {
    if (!r.input) continue;
    if (r.input->numerical_features) {
      for (const auto& [k, v] : *r.input->numerical_features) out[k] = "numerical";
    }
    if (r.input->categorical_features) {
      for (const auto& [k, v] : *r.input->categorical_features) out.emplace(k, "categorical");
    }
  }
  return out;
}

}  // namespace

std::vector<Finding> load_inputs(const std::string& input_uri, data::TaskKind task, bool need_train, Inputs& out) {
  std::vector<Finding> findings;
  try {
    out.dir = data::load_split_directory(resolve_uri(input_uri));
  } catch (const Error& e) {
    findings.push_back({"missing_input", "", e.what(), {}});
    return findings;
  }
  auto get = [&](data::SplitRole role) -> const data::DatasetSplit* {
    const auto it = out.dir.splits.find(role);
    return it == out.dir.splits.end() ? nullptr : &it->second.split;
  };
  out.train = get(data::SplitRole::kTrain);
  out.validation = get(data::SplitRole::kValidation);
  out.test = get(data::SplitRole::kTest);
  if (need_train && out.train == nullptr) findings.push_back({"missing_split", "train", "train.jsonl is required", {}});
  if (out.test == nullptr) findings.push_back({"missing_split", "test", "test.jsonl is required", {}});

  for (const auto& [role, parsed] : out.dir.splits) {
    const auto name = data::to_string(role);
    for (const auto& v : parsed.violations) {
      findings.push_back({v.code, v.record_id.value_or(""), fmt::format("{} line {}: {}", name, v.line_number, v.message),
                          v.line_number});
    }
    for (auto f : data::validate_for_task(parsed.split, task).findings) {
      f.message = fmt::format("{}: {}", name, f.message);
      findings.push_back(std::move(f));
    }
  }
  if (data::is_tabular(task) && out.train != nullptr) {
    const auto reference = feature_kinds(*out.train);
    for (const auto* split : {out.validation, out.test}) {
      if (split == nullptr || split->records.empty()) continue;
      if (feature_kinds(*split) != reference) {
        findings.push_back({"inconsistent_feature_set", std::string(data::to_string(split->role)),
                            fmt::format("{} features or kinds differ from train", data::to_string(split->role)), {}});
      }
    }
  }
  return findings;
}

RunArtifacts::RunArtifacts(const std::string& output_uri) : dir_(resolve_uri(output_uri)) {
  std::error_code ec;
  fs::create_directories(dir_ / "model", ec);
  if (ec) throw Error(ErrorCode::kIoError, fmt::format("cannot create {}: {}", dir_.string(), ec.message()));
}

void RunArtifacts::write_predictions(const std::vector<Prediction>& predictions) const {
  std::string out;
  for (const auto& p : predictions) {
    ordered_json j;
    j["unique_id"] = p.unique_id;
    if (const auto* s = std::get_if<std::string>(&p.value)) {
      j["prediction"] = *s;
    } else {
      j["prediction"] = std::get<double>(p.value);
    }
    if (p.score) j["score"] = *p.score;
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(dir_ / "predictions.jsonl", out);
}

void RunArtifacts::write_metrics(const json& doc) const { write_file_atomic(dir_ / "metrics.json", doc.dump(2) + "\n"); }

void RunArtifacts::write_manifest(const json& manifest) const {
  write_file_atomic(dir_ / "model" / "manifest.json", manifest.dump(2) + "\n");
}

void RunArtifacts::write_log() const {
  std::string text;
  for (const auto& l : log_) text += l + "\n";
  write_file_atomic(dir_ / "run_log.txt", text);
}

std::string RunArtifacts::model_uri() const { return file_uri(dir_ / "model"); }
std::string RunArtifacts::log_uri() const { return file_uri(dir_ / "run_log.txt"); }

json metrics_document(const ToolRunResult& result, const json& heuristic_reports) {
  json doc;
  if (result.metrics) {
    doc = {{"evaluated", true}, {"metrics", *result.metrics}, {"ill_defined", result.ill_defined_metrics}};
  } else {
    doc = {{"evaluated", false}, {"metrics", nullptr}, {"note", "not evaluated"}};
  }
  doc["warnings"] = result.warnings;
  if (!heuristic_reports.is_null()) doc["heuristic_reports"] = heuristic_reports;
  return doc;
}

ToolRunResult failed(std::string reason, std::vector<Finding> findings, RunArtifacts* artifacts) {
  ToolRunResult r;
  r.status = RunStatus::kFailed;
  r.failure_reason = std::move(reason);
  r.findings = std::move(findings);
  if (artifacts != nullptr) {
    artifacts->log("status: failed");
    artifacts->log("reason: " + r.failure_reason);
    for (const auto& f : r.findings) artifacts->log(fmt::format("finding {} [{}]: {}", f.code, f.subject, f.message));
    artifacts->write_log();
    r.log_uri = artifacts->log_uri();
  }
  return r;
}

}  // namespace consult::prototype::detail
