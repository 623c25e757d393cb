#include "consult/questionnaire/schema.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "consult/common/error.hpp"

namespace consult::questionnaire {

namespace detail {
extern const std::string_view kDefaultSchemaDocument;
}

using nlohmann::json;

std::string_view to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::kFreeText: return "free_text";
    case AnswerKind::kSingleChoice: return "single_choice";
    case AnswerKind::kMultiChoice: return "multi_choice";
    case AnswerKind::kNumeric: return "numeric";
    case AnswerKind::kBoolean: return "boolean";
  }
  return "free_text";
}

AnswerKind answer_kind_from_string(std::string_view s) {
  if (s == "free_text") return AnswerKind::kFreeText;
  if (s == "single_choice") return AnswerKind::kSingleChoice;
  if (s == "multi_choice") return AnswerKind::kMultiChoice;
  if (s == "numeric") return AnswerKind::kNumeric;
  if (s == "boolean") return AnswerKind::kBoolean;
  throw Error(ErrorCode::kParseError, fmt::format("unknown answer kind '{}'", s));
}

QuestionnaireSchema::QuestionnaireSchema(std::vector<Section> sections)
    : sections_(std::move(sections)) {
  for (std::size_t s = 0; s < sections_.size(); ++s) {
    for (std::size_t q = 0; q < sections_[s].questions.size(); ++q) {
      index_.emplace(sections_[s].questions[q].id, std::make_pair(s, q));
    }
  }
}

const QuestionSpec* QuestionnaireSchema::find(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  return &sections_[it->second.first].questions[it->second.second];
}

std::vector<const QuestionSpec*> QuestionnaireSchema::all_questions() const {
  std::vector<const QuestionSpec*> out;
  for (const auto& section : sections_) {
    for (const auto& q : section.questions) out.push_back(&q);
  }
  return out;
}

std::size_t QuestionnaireSchema::question_count() const { return index_.size(); }

namespace {

std::string required_string(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("{}: field '{}' must be a string", where, key));
  }
  return obj[key].get<std::string>();
}

}  // namespace

QuestionnaireSchema load_schema(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("schema config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("sections") || !doc["sections"].is_array()) {
    throw Error(ErrorCode::kParseError, "schema config must be an object with a 'sections' array");
  }
  const auto& raw_sections = doc["sections"];
  if (raw_sections.size() != kSectionNames.size()) {
    throw Error(ErrorCode::kParseError, "section count must be 6",
                {fmt::format("found {} sections", raw_sections.size())});
  }

  std::vector<Section> sections;
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < raw_sections.size(); ++i) {
    const auto& raw = raw_sections[i];
    if (!raw.is_object()) throw Error(ErrorCode::kParseError, "each section must be an object");
    Section section;
    section.name = required_string(raw, "name", fmt::format("section {}", i));
    if (section.name != kSectionNames[i]) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("section {} must be named '{}', found '{}'", i + 1, kSectionNames[i],
                              section.name));
    }
    if (!raw.contains("questions") || !raw["questions"].is_array() || raw["questions"].empty()) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("section '{}' must contain at least one question", section.name));
    }
    for (const auto& rq : raw["questions"]) {
      if (!rq.is_object()) throw Error(ErrorCode::kParseError, "each question must be an object");
      QuestionSpec q;
      q.section = section.name;
      q.id = required_string(rq, "id", section.name);
      const auto where = fmt::format("question '{}'", q.id);
      if (q.id.empty()) throw Error(ErrorCode::kParseError, "question id must be non-empty");
      q.text = required_string(rq, "text", where);
      q.kind = answer_kind_from_string(required_string(rq, "kind", where));
      q.required = rq.value("required", false);
      if (rq.contains("options")) {
        if (!rq["options"].is_array()) {
          throw Error(ErrorCode::kParseError, where + ": options must be an array");
        }
        for (const auto& o : rq["options"]) {
          if (!o.is_string()) throw Error(ErrorCode::kParseError, where + ": options must be strings");
          q.options.push_back(o.get<std::string>());
        }
      }
      if (is_choice(q.kind) && q.options.empty()) {
        throw Error(ErrorCode::kParseError, where + ": choice question without options");
      }
      if (!is_choice(q.kind) && !q.options.empty()) {
        throw Error(ErrorCode::kParseError, where + ": options given for a non-choice question");
      }
      if (rq.contains("help")) q.help_text = rq["help"].get<std::string>();
      if (rq.contains("audience")) q.audience = rq["audience"].get<std::string>();
      if (!seen_ids.insert(q.id).second) {
        throw Error(ErrorCode::kParseError, fmt::format("duplicate question id '{}'", q.id));
      }
      section.questions.push_back(std::move(q));
    }
    sections.push_back(std::move(section));
  }
  return QuestionnaireSchema(std::move(sections));
}

std::string serialize_schema(const QuestionnaireSchema& schema) {
  json sections = json::array();
  for (const auto& section : schema.sections()) {
    json questions = json::array();
    for (const auto& q : section.questions) {
      json jq = {{"id", q.id}, {"text", q.text}, {"kind", to_string(q.kind)},
                 {"required", q.required}};
      if (!q.options.empty()) jq["options"] = q.options;
      if (q.help_text) jq["help"] = *q.help_text;
      if (q.audience) jq["audience"] = *q.audience;
      questions.push_back(std::move(jq));
    }
    sections.push_back({{"name", section.name}, {"questions", std::move(questions)}});
  }
  return json{{"version", 1}, {"sections", std::move(sections)}}.dump(2) + "\n";
}

std::string_view default_schema_document() { return detail::kDefaultSchemaDocument; }

const QuestionnaireSchema& default_schema() {
  static const QuestionnaireSchema schema = load_schema(detail::kDefaultSchemaDocument);
  return schema;
}

}  // namespace consult::questionnaire
