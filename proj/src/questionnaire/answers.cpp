#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"
#include "consult/questionnaire/schema.hpp"

namespace consult::questionnaire {

using nlohmann::json;

std::string_view to_string(AnswerSource source) {
  switch (source) {
    case AnswerSource::kUser: return "user";
    case AnswerSource::kSmartFill: return "smartfill";
    case AnswerSource::kSmartFillEdited: return "smartfill_edited";
  }
  return "user";
}

AnswerSource answer_source_from_string(std::string_view s) {
  if (s == "user") return AnswerSource::kUser;
  if (s == "smartfill") return AnswerSource::kSmartFill;
  if (s == "smartfill_edited") return AnswerSource::kSmartFillEdited;
  throw Error(ErrorCode::kParseError, fmt::format("unknown answer source '{}'", s));
}

bool value_matches_kind(const AnswerValue& value, AnswerKind kind) {
  switch (kind) {
    case AnswerKind::kFreeText:
    case AnswerKind::kSingleChoice:
      return std::holds_alternative<std::string>(value);
    case AnswerKind::kMultiChoice:
      return std::holds_alternative<std::vector<std::string>>(value);
    case AnswerKind::kNumeric:
      return std::holds_alternative<double>(value) && std::isfinite(std::get<double>(value));
    case AnswerKind::kBoolean:
      return std::holds_alternative<bool>(value);
  }
  return false;
}

json value_to_json(const AnswerValue& value) {
  return std::visit([](const auto& v) { return json(v); }, value);
}

std::optional<AnswerValue> value_from_json(const json& j, AnswerKind kind) {
  switch (kind) {
    case AnswerKind::kFreeText:
    case AnswerKind::kSingleChoice:
      if (j.is_string()) return AnswerValue{j.get<std::string>()};
      return std::nullopt;
    case AnswerKind::kMultiChoice: {
      if (!j.is_array()) return std::nullopt;
      std::vector<std::string> items;
      for (const auto& e : j) {
        if (!e.is_string()) return std::nullopt;
        items.push_back(e.get<std::string>());
      }
      return AnswerValue{std::move(items)};
    }
    case AnswerKind::kNumeric:
      if (j.is_number()) return AnswerValue{j.get<double>()};
      return std::nullopt;
    case AnswerKind::kBoolean:
      if (j.is_boolean()) return AnswerValue{j.get<bool>()};
      return std::nullopt;
  }
  return std::nullopt;
}

namespace {

// Keeps the JSON's own shape for values whose question kind is unknown.
AnswerValue natural_value(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  if (j.is_array()) {
    std::vector<std::string> items;
    for (const auto& e : j) items.push_back(e.is_string() ? e.get<std::string>() : e.dump());
    return items;
  }
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

}  // namespace

std::string render_value(const AnswerValue& value) {
  struct Renderer {
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(const std::vector<std::string>& items) const {
      return items.empty() ? std::string("(none selected)") : fmt::format("{}", fmt::join(items, ", "));
    }
    std::string operator()(double d) const { return fmt::format("{}", d); }
    std::string operator()(bool b) const { return b ? "Yes" : "No"; }
  };
  return std::visit(Renderer{}, value);
}

json answers_to_json(const AnswerSet& answers) {
  json out = json::object();
  for (const auto& [id, answer] : answers.answers) {
    out[id] = {{"value", value_to_json(answer.value)}, {"source", to_string(answer.source)}};
  }
  return {{"project_description", answers.project_description}, {"answers", std::move(out)}};
}

AnswerSet answers_from_json(const json& j, const QuestionnaireSchema& schema) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "answer set must be a JSON object");
  AnswerSet set;
  set.project_description = j.value("project_description", "");
  if (!j.contains("answers")) return set;
  for (const auto& [id, entry] : j["answers"].items()) {
    Answer a;
    a.question_id = id;
    const json& raw = entry.is_object() && entry.contains("value") ? entry["value"] : entry;
    std::optional<AnswerValue> typed;
    if (const auto* q = schema.find(id)) typed = value_from_json(raw, q->kind);
    a.value = typed ? *typed : natural_value(raw);
    if (entry.is_object() && entry.contains("source")) {
      a.source = answer_source_from_string(entry["source"].get<std::string>());
    }
    set.answers.emplace(id, std::move(a));
  }
  return set;
}

namespace {

bool is_blank(const AnswerValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return trim(*s).empty();
  if (const auto* items = std::get_if<std::vector<std::string>>(&v)) return items->empty();
  return false;
}

}  // namespace

ValidationReport validate_answers(const QuestionnaireSchema& schema, const AnswerSet& answers) {
  ValidationReport report;
  for (const auto& [id, answer] : answers.answers) {
    if (schema.find(id) == nullptr) {
      report.add("unknown_question", id, fmt::format("no question with id '{}'", id));
    }
  }
  for (const auto* q : schema.all_questions()) {
    const auto it = answers.answers.find(q->id);
    if (it == answers.answers.end() || is_blank(it->second.value)) {
      if (q->required) report.add("missing_required", q->id, "required question is unanswered");
      continue;
    }
    const auto& value = it->second.value;
    if (!value_matches_kind(value, q->kind)) {
      report.add("type_mismatch", q->id,
                 fmt::format("expected a {} answer", to_string(q->kind)));
      continue;
    }
    const auto in_options = [&](const std::string& s) {
      return std::find(q->options.begin(), q->options.end(), s) != q->options.end();
    };
    if (q->kind == AnswerKind::kSingleChoice && !in_options(std::get<std::string>(value))) {
      report.add("invalid_option", q->id, "answer is not one of the listed options");
    }
    if (q->kind == AnswerKind::kMultiChoice) {
      for (const auto& item : std::get<std::vector<std::string>>(value)) {
        if (!in_options(item)) {
          report.add("invalid_option", q->id, fmt::format("'{}' is not a listed option", item));
          break;
        }
      }
    }
  }
  return report;
}

std::string format_qa(const QuestionnaireSchema& schema, const AnswerSet& answers) {
  std::string out;
  if (!trim(answers.project_description).empty()) {
    out += "Project description: ";
    out += trim(answers.project_description);
    out += "\n\n";
  }
  for (const auto& section : schema.sections()) {
    out += "## ";
    out += section.name;
    out += "\n";
    for (const auto& q : section.questions) {
      const auto it = answers.answers.find(q.id);
      const bool answered = it != answers.answers.end() && !is_blank(it->second.value);
      out += "Q: ";
      out += q.text;
      out += "\nA: ";
      out += answered ? render_value(it->second.value) : "UNANSWERED";
      out += "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace consult::questionnaire
