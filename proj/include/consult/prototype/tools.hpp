#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/common/report.hpp"
#include "consult/data/template.hpp"
#include "consult/llm/gateway.hpp"
#include "consult/prototype/metrics.hpp"

namespace consult::recommend {
struct RecommendationDoc;
}

namespace consult::prototype {

enum class ParamKind { kNumber, kInteger, kString, kBoolean };
std::string_view to_string(ParamKind kind);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kNumber;
  bool required = false;
  nlohmann::json default_value;  // null when there is no default
  std::optional<double> minimum;
  std::optional<double> maximum;
  bool exclusive_minimum = false;
  std::vector<std::string> allowed;  // string enums
  std::string description;
};

struct ToolSpec {
  std::string name;
  std::set<data::TaskKind> task_kinds;
  std::vector<ParamSpec> params;
  std::string description;

  const ParamSpec* param(std::string_view name) const;
};

inline constexpr std::string_view kTabularBaseline = "tabular_baseline";
inline constexpr std::string_view kTabularLinear = "tabular_linear";
inline constexpr std::string_view kTextPromptDirect = "text_prompt_direct";
inline constexpr std::string_view kTextPromptCot = "text_prompt_cot";
inline constexpr std::string_view kStepByStepInstruction =
    "Think through the problem step by step, then give the final answer on a last line starting with \"Answer:\".";

class ToolRegistry {
 public:
  static ToolRegistry with_builtin_tools();

  void add(ToolSpec spec);  // throws kConflict on a duplicate name
  const ToolSpec* find(std::string_view name) const;
  const std::vector<ToolSpec>& tools() const { return tools_; }

 private:
  std::vector<ToolSpec> tools_;
};

const std::vector<ToolSpec>& list_tools(const ToolRegistry& registry);

// Unknown names rejected, ranges and enums enforced, defaults filled.
// Throws kParamValidation; every message names the offending parameter.
nlohmann::json validate_params(const ToolSpec& spec, const nlohmann::json& params);

// The task kind a validated parameter set targets ("task" parameter).
data::TaskKind task_of(const nlohmann::json& validated_params);

struct ToolSelection {
  const ToolSpec* spec = nullptr;
  nlohmann::json params;
};

// One structured call; nothing is executed. Throws kUnknownTool or kParamValidation.
ToolSelection select_tool(std::string_view task_summary, const ToolRegistry& registry, llm::Gateway& gateway);
std::string selection_summary(const recommend::RecommendationDoc& doc);

struct ToolRequest {
  std::string tool_name;
  std::string input_uri;   // directory with train/validation/test .jsonl
  std::string output_uri;  // directory the run owns
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::vector<std::string> metric_names;
  std::string compute_profile = "local";
};

enum class RunStatus { kSucceeded, kSucceededWithWarnings, kFailed };
std::string_view to_string(RunStatus s);

struct RecordFailure {
  std::string unique_id;
  std::string error;
};

struct ToolRunResult {
  RunStatus status = RunStatus::kFailed;
  std::string failure_reason;
  std::vector<Finding> findings;  // template problems behind a failure
  std::string model_artifact_uri;
  std::vector<Prediction> predictions;
  std::optional<std::map<std::string, double>> metrics;  // nullopt: not evaluated
  std::set<std::string> ill_defined_metrics;
  std::string log_uri;
  std::vector<std::string> warnings;
  std::vector<RecordFailure> record_failures;
};

// Artifacts: predictions.jsonl, metrics.json, run_log.txt, model/manifest.json.
ToolRunResult run_tabular_tool(const ToolRequest& request, const ToolRegistry& registry);
ToolRunResult run_text_prompting_tool(const ToolRequest& request, const ToolRegistry& registry,
                                      llm::Gateway& gateway);
// Dispatches on the tool's task kinds; text tools need a gateway.
ToolRunResult run_tool(const ToolRequest& request, const ToolRegistry& registry, llm::Gateway* gateway);

void to_json(nlohmann::json& j, const ParamSpec& p);
void to_json(nlohmann::json& j, const ToolSpec& t);
void to_json(nlohmann::json& j, const ToolRequest& r);
ToolRequest tool_request_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const ToolRunResult& r);

}  // namespace consult::prototype
