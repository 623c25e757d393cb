#include <map>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"
#include "consult/prototype/tools.hpp"
#include "run_support.hpp"

namespace consult::prototype {

using nlohmann::json;

namespace {

constexpr std::string_view kSystemText =
    "You solve the task shown in the input. Reply with the answer only unless told otherwise.";

// Text after the last line starting with "Answer:", or the whole reply.
std::string extract_answer(const std::string& reply) {
  std::string answer;
  bool found = false;
  std::size_t start = 0;
  while (start <= reply.size()) {
    const auto end = std::min(reply.find('\n', start), reply.size());
    const auto line = trim(std::string_view(reply).substr(start, end - start));
    if (starts_with_icase(line, "answer:")) {
      answer = std::string(trim(line.substr(7)));
      found = true;
    }
    start = end + 1;
  }
  return found ? answer : std::string(trim(reply));
}

}  // namespace

ToolRunResult run_text_prompting_tool(const ToolRequest& request, const ToolRegistry& registry, llm::Gateway& gateway) {
  const ToolSpec* spec = registry.find(request.tool_name);
  if (spec == nullptr) throw Error(ErrorCode::kUnknownTool, fmt::format("unknown tool '{}'", request.tool_name));
  if (spec->name != kTextPromptDirect && spec->name != kTextPromptCot) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("'{}' is not a text prompting tool", spec->name));
  }
  const json params = validate_params(*spec, request.hyperparameters);
  const bool cot = spec->name == kTextPromptCot;

  detail::RunArtifacts artifacts(request.output_uri);
  artifacts.log(fmt::format("tool: {}", spec->name));
  artifacts.log(fmt::format("params: {}", params.dump()));
  artifacts.log(fmt::format("compute_profile: {} (ignored, runs locally)", request.compute_profile));
  if (!request.metric_names.empty()) {
    return detail::failed("text generation outputs are not scored with metrics",
                          {{"invalid_metric", request.metric_names.front(), "not defined for text_generation", {}}},
                          &artifacts);
  }

  detail::Inputs in;
  auto findings = detail::load_inputs(request.input_uri, data::TaskKind::kTextGeneration, false, in);
  if (!findings.empty()) return detail::failed("input data failed template validation", std::move(findings), &artifacts);
  artifacts.log(fmt::format("test records: {}", in.test->records.size()));

  ToolRunResult result;
  const auto max_tokens = static_cast<std::size_t>(params.at("max_output_tokens").get<std::int64_t>());
  for (const auto& r : in.test->records) {
    llm::ChatRequest req;
    req.system_text = std::string(kSystemText);
    req.user_text = cot ? fmt::format("{}\n\nInput:\n{}", kStepByStepInstruction, *r.input->text)
                        : fmt::format("Input:\n{}", *r.input->text);
    req.max_output_tokens = max_tokens;
    try {
      const auto reply = gateway.complete(req);
      result.predictions.push_back({r.unique_id, cot ? extract_answer(reply) : std::string(trim(reply)), std::nullopt});
    } catch (const Error& e) {
      result.record_failures.push_back({r.unique_id, e.what()});
      artifacts.log(fmt::format("record {} failed: {}", r.unique_id, e.what()));
    }
  }
  if (!in.test->records.empty() && result.record_failures.size() == in.test->records.size()) {
    auto failures = std::move(result.record_failures);
    auto out = detail::failed("every test record failed", {}, &artifacts);
    out.record_failures = std::move(failures);
    return out;
  }
  for (const auto& f : result.record_failures) result.warnings.push_back(fmt::format("record {} failed", f.unique_id));

  json heuristic;
  if (params.at("exact_match_report").get<bool>()) {
    std::size_t with_output = 0;
    std::size_t matched = 0;
    std::map<std::string, const data::DataRecord*> by_id;
    for (const auto& r : in.test->records) by_id[r.unique_id] = &r;
    for (const auto& p : result.predictions) {
      const auto* rec = by_id.at(p.unique_id);
      if (!rec->output || !rec->output->text) continue;
      ++with_output;
      if (normalize_text_answer(std::get<std::string>(p.value)) == normalize_text_answer(*rec->output->text)) ++matched;
    }
    if (with_output > 0) {
      heuristic = {{"normalized_exact_match",
                    {{"value", static_cast<double>(matched) / static_cast<double>(with_output)},
                     {"compared", with_output},
                     {"note", "heuristic string comparison after normalization; not a metric"}}}};
    } else {
      result.warnings.push_back("exact_match_report requested but no test record has output.text");
    }
  }

  result.status = result.warnings.empty() ? RunStatus::kSucceeded : RunStatus::kSucceededWithWarnings;
  artifacts.log(fmt::format("status: {}", to_string(result.status)));
  artifacts.write_predictions(result.predictions);
  artifacts.write_metrics(detail::metrics_document(result, heuristic));
  artifacts.write_manifest({{"format_version", 1},
                            {"tool", spec->name},
                            {"task", "text_generation"},
                            {"params", params},
                            {"backend", std::string(gateway.backend().kind())},
                            {"system_text", kSystemText},
                            {"instruction", cot ? json(kStepByStepInstruction) : json(nullptr)}});
  artifacts.write_log();
  result.model_artifact_uri = artifacts.model_uri();
  result.log_uri = artifacts.log_uri();
  return result;
}

ToolRunResult run_tool(const ToolRequest& request, const ToolRegistry& registry, llm::Gateway* gateway) {
  const ToolSpec* spec = registry.find(request.tool_name);
  if (spec == nullptr) throw Error(ErrorCode::kUnknownTool, fmt::format("unknown tool '{}'", request.tool_name));
  if (spec->task_kinds.count(data::TaskKind::kTextGeneration) != 0) {
    if (gateway == nullptr) throw Error(ErrorCode::kPrecondition, fmt::format("'{}' needs a language model", spec->name));
    return run_text_prompting_tool(request, registry, *gateway);
  }
  return run_tabular_tool(request, registry);
}

}  // namespace consult::prototype
