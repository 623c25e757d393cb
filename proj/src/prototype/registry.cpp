#include <cmath>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/llm/json_schema.hpp"
#include "consult/prototype/tools.hpp"
#include "consult/recommend/recommendation.hpp"

namespace consult::prototype {

using nlohmann::json;

namespace {

std::vector<std::string> task_names(const std::set<data::TaskKind>& kinds) {
  std::vector<std::string> out;
  for (auto k : kinds) out.emplace_back(data::to_string(k));
  return out;
}

ParamSpec task_param(const std::set<data::TaskKind>& kinds, bool required) {
  ParamSpec p{"task", ParamKind::kString, required, nullptr, {}, {}, false, task_names(kinds),
              "Prediction task the data is laid out for."};
  if (!required) p.default_value = task_names(kinds).front();
  return p;
}

ParamSpec integer(std::string name, int def, double lo, double hi, std::string description) {
  return {std::move(name), ParamKind::kInteger, false, def, lo, hi, false, {}, std::move(description)};
}

std::string describe_number(const ParamSpec& p) {
  std::string out;
  if (p.minimum) out += fmt::format(" {} {}", p.exclusive_minimum ? ">" : ">=", *p.minimum);
  if (p.maximum) out += fmt::format(" <= {}", *p.maximum);
  return out;
}

}  // namespace

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::kNumber: return "number";
    case ParamKind::kInteger: return "integer";
    case ParamKind::kString: return "string";
    case ParamKind::kBoolean: return "boolean";
  }
  return "number";
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kSucceeded: return "succeeded";
    case RunStatus::kSucceededWithWarnings: return "succeeded_with_warnings";
    case RunStatus::kFailed: return "failed";
  }
  return "failed";
}

const ParamSpec* ToolSpec::param(std::string_view n) const {
  for (const auto& p : params) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

void ToolRegistry::add(ToolSpec spec) {
  if (find(spec.name) != nullptr) {
    throw Error(ErrorCode::kConflict, fmt::format("tool '{}' is already registered", spec.name));
  }
  tools_.push_back(std::move(spec));
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
  for (const auto& t : tools_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

ToolRegistry ToolRegistry::with_builtin_tools() {
  using data::TaskKind;
  const std::set<TaskKind> tabular = {TaskKind::kRegression, TaskKind::kBinaryClassification,
                                      TaskKind::kMulticlassClassification};
  const std::set<TaskKind> text = {TaskKind::kTextGeneration};
  ToolRegistry r;
  r.add({std::string(kTabularBaseline),
         tabular,
         {task_param(tabular, true), integer("seed", 0, 0, 2147483647, "Recorded for reproducibility.")},
         "Predicts the training mean (regression) or the most frequent training label (classification). "
         "Use it as a floor for any tabular task."});
  r.add({std::string(kTabularLinear),
         tabular,
         {task_param(tabular, true),
          {"learning_rate", ParamKind::kNumber, false, 0.1, 0.0, 10.0, true, {}, "Gradient descent step size."},
          integer("epochs", 200, 1, 10000, "Passes over the training split."),
          {"l2", ParamKind::kNumber, false, 0.0, 0.0, 100.0, false, {}, "L2 penalty on weights."},
          integer("batch_size", 0, 0, 1000000, "Mini-batch size; 0 uses the full training split."),
          integer("seed", 0, 0, 2147483647, "Seed for mini-batch shuffling."),
          {"positive_label", ParamKind::kString, false, nullptr, {}, {}, false, {},
           "Positive class for binary metrics; defaults to the lexicographically greater label."}},
         "Linear regression, logistic regression or softmax regression trained by gradient descent on "
         "standardized numerical and one-hot categorical features; the epoch with the best validation "
         "score is kept."});
  const std::vector<ParamSpec> text_params = {
      task_param(text, false),
      integer("max_output_tokens", 512, 1, 8192, "Reply length cap per record."),
      {"exact_match_report", ParamKind::kBoolean, false, false, {}, {}, false, {},
       "Also write a heuristic normalized exact-match report when test outputs exist."}};
  r.add({std::string(kTextPromptDirect), text, text_params,
         "Prompts the language model once per test record with the input text and records the reply."});
  r.add({std::string(kTextPromptCot), text, text_params,
         "Like text_prompt_direct, but asks the model to reason step by step before a final answer line."});
  return r;
}

const std::vector<ToolSpec>& list_tools(const ToolRegistry& registry) { return registry.tools(); }

json validate_params(const ToolSpec& spec, const json& params) {
  if (!params.is_object() && !params.is_null()) {
    throw Error(ErrorCode::kParamValidation, "parameters must be a JSON object");
  }
  std::vector<std::string> problems;
  json out = json::object();
  if (params.is_object()) {
    for (const auto& [name, value] : params.items()) {
      if (spec.param(name) == nullptr) problems.push_back(fmt::format("unknown parameter '{}' for {}", name, spec.name));
    }
  }
  for (const auto& p : spec.params) {
    const bool given = params.is_object() && params.contains(p.name) && !params[p.name].is_null();
    if (!given) {
      if (p.required) {
        problems.push_back(fmt::format("parameter '{}' is required", p.name));
      } else if (!p.default_value.is_null()) {
        out[p.name] = p.default_value;
      }
      continue;
    }
    const auto& v = params[p.name];
    switch (p.kind) {
      case ParamKind::kString:
        if (!v.is_string()) {
          problems.push_back(fmt::format("parameter '{}' must be a string", p.name));
          continue;
        }
        if (!p.allowed.empty() &&
            std::find(p.allowed.begin(), p.allowed.end(), v.get<std::string>()) == p.allowed.end()) {
          problems.push_back(fmt::format("parameter '{}' must be one of {}", p.name, fmt::join(p.allowed, ", ")));
          continue;
        }
        out[p.name] = v;
        continue;
      case ParamKind::kBoolean:
        if (!v.is_boolean()) {
          problems.push_back(fmt::format("parameter '{}' must be a boolean", p.name));
          continue;
        }
        out[p.name] = v;
        continue;
      case ParamKind::kNumber:
      case ParamKind::kInteger: break;
    }
    if (!v.is_number()) {
      problems.push_back(fmt::format("parameter '{}' must be a {}", p.name, to_string(p.kind)));
      continue;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d) || (p.kind == ParamKind::kInteger && d != std::floor(d))) {
      problems.push_back(fmt::format("parameter '{}' must be a finite {}", p.name, to_string(p.kind)));
      continue;
    }
    const bool below = p.minimum && (p.exclusive_minimum ? d <= *p.minimum : d < *p.minimum);
    const bool above = p.maximum && d > *p.maximum;
    if (below || above) {
      problems.push_back(fmt::format("parameter '{}' = {} is out of range (must be{})", p.name, d, describe_number(p)));
      continue;
    }
    out[p.name] = p.kind == ParamKind::kInteger ? json(static_cast<std::int64_t>(d)) : json(d);
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::kParamValidation, fmt::format("invalid parameters: {}", fmt::join(problems, "; ")),
                problems);
  }
  return out;
}

data::TaskKind task_of(const json& validated) {
  if (!validated.contains("task")) throw Error(ErrorCode::kParamValidation, "parameter 'task' is required");
  return data::task_kind_from_string(validated["task"].get<std::string>());
}

ToolSelection select_tool(std::string_view task_summary, const ToolRegistry& registry, llm::Gateway& gateway) {
  if (registry.tools().empty()) throw Error(ErrorCode::kPrecondition, "tool registry is empty");
  std::string listing;
  for (const auto& t : registry.tools()) {
    listing += fmt::format("- {}: {}\n  tasks: {}\n  parameters:\n", t.name, t.description,
                           fmt::join(task_names(t.task_kinds), ", "));
    for (const auto& p : t.params) {
      listing += fmt::format("    - {} ({}{}{}){}: {}\n", p.name, to_string(p.kind), p.required ? ", required" : "",
                             p.default_value.is_null() ? "" : ", default " + p.default_value.dump(),
                             p.allowed.empty() ? "" : fmt::format(" one of [{}]", fmt::join(p.allowed, ", ")),
                             p.description);
    }
  }
  llm::ChatRequest request;
  request.system_text =
      "You choose one prototype tool from a fixed list and set its parameters. You never write code.";
  request.user_text = fmt::format(
      "Task summary:\n{}\n\nAvailable tools:\n{}\nReturn the tool name in \"tool_name\" and parameter values "
      "in \"params\". Only use parameters listed for that tool.",
      task_summary, listing);
  request.output_schema = {{"type", "object"},
                           {"properties", {{"tool_name", {{"type", "string"}}}, {"params", {{"type", "object"}}}}},
                           {"required", {"tool_name", "params"}}};
  const auto reply = gateway.complete_structured(request);
  const auto name = reply["tool_name"].get<std::string>();
  const auto* spec = registry.find(name);
  if (spec == nullptr) {
    std::vector<std::string> names;
    for (const auto& t : registry.tools()) names.push_back(t.name);
    throw Error(ErrorCode::kUnknownTool, fmt::format("unknown tool '{}'", name), names);
  }
  return {spec, validate_params(*spec, reply["params"])};
}

std::string selection_summary(const recommend::RecommendationDoc& doc) {
  return fmt::format("Best solution:\n{}\n\nStrong baseline:\n{}\n\nStrong baseline steps:\n{}",
                     doc.best_solution.description, doc.strong_baseline.description,
                     doc.strong_baseline.step_by_step);
}

void to_json(json& j, const ParamSpec& p) {
  j = {{"name", p.name}, {"kind", to_string(p.kind)}, {"required", p.required}, {"description", p.description}};
  if (!p.default_value.is_null()) j["default"] = p.default_value;
  if (p.minimum) j[p.exclusive_minimum ? "exclusive_minimum" : "minimum"] = *p.minimum;
  if (p.maximum) j["maximum"] = *p.maximum;
  if (!p.allowed.empty()) j["allowed"] = p.allowed;
}

void to_json(json& j, const ToolSpec& t) {
  j = {{"name", t.name}, {"task_kinds", task_names(t.task_kinds)}, {"params", t.params},
       {"description", t.description}};
}

void to_json(json& j, const ToolRequest& r) {
  j = {{"tool_name", r.tool_name},           {"input_uri", r.input_uri},       {"output_uri", r.output_uri},
       {"hyperparameters", r.hyperparameters}, {"metric_names", r.metric_names}, {"compute_profile", r.compute_profile}};
}

ToolRequest tool_request_from_json(const json& j) {
  ToolRequest r;
  try {
    r.tool_name = j.at("tool_name").get<std::string>();
    r.input_uri = j.at("input_uri").get<std::string>();
    r.output_uri = j.value("output_uri", "");
    r.hyperparameters = j.value("hyperparameters", json::object());
    r.metric_names = j.value("metric_names", std::vector<std::string>{});
    r.compute_profile = j.value("compute_profile", "local");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("malformed tool request: {}", e.what()));
  }
  return r;
}

void to_json(json& j, const ToolRunResult& r) {
  json preds = json::array();
  for (const auto& p : r.predictions) {
    json e = {{"unique_id", p.unique_id}, {"prediction", value_to_json(p.value)}};
    if (p.score) e["score"] = *p.score;
    preds.push_back(std::move(e));
  }
  json failures = json::array();
  for (const auto& f : r.record_failures) failures.push_back({{"unique_id", f.unique_id}, {"error", f.error}});
  j = {{"status", to_string(r.status)},
       {"failure_reason", r.failure_reason},
       {"findings", r.findings},
       {"model_artifact_uri", r.model_artifact_uri},
       {"predictions", preds},
       {"metrics", r.metrics ? json(*r.metrics) : json(nullptr)},
       {"evaluated", r.metrics.has_value()},
       {"ill_defined_metrics", r.ill_defined_metrics},
       {"log_uri", r.log_uri},
       {"warnings", r.warnings},
       {"record_failures", failures}};
}

}  // namespace consult::prototype
