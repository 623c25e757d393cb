#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/data/template.hpp"
#include "consult/prototype/tools.hpp"

namespace consult::prototype::detail {

struct Inputs {
  data::SplitDirectory dir;
  const data::DatasetSplit* train = nullptr;
  const data::DatasetSplit* validation = nullptr;
  const data::DatasetSplit* test = nullptr;
};

// Findings for every parse violation, task-validation finding and cross-split
// feature mismatch. Inputs are usable only when the list is empty.
std::vector<Finding> load_inputs(const std::string& input_uri, data::TaskKind task, bool need_train, Inputs& out);

class RunArtifacts {
 public:
  explicit RunArtifacts(const std::string& output_uri);

  void log(std::string line) { log_.push_back(std::move(line)); }
  void write_predictions(const std::vector<Prediction>& predictions) const;
  void write_metrics(const nlohmann::json& metrics_document) const;
  void write_manifest(const nlohmann::json& manifest) const;
  void write_log() const;

  std::string model_uri() const;
  std::string log_uri() const;

 private:
  std::filesystem::path dir_;
  std::vector<std::string> log_;
};

nlohmann::json metrics_document(const ToolRunResult& result, const nlohmann::json& heuristic_reports);

// Fills failure fields and writes the log when the output directory is usable.
ToolRunResult failed(std::string reason, std::vector<Finding> findings, RunArtifacts* artifacts);

}  // namespace consult::prototype::detail
