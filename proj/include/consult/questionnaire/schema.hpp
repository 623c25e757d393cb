#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/common/report.hpp"

namespace consult::questionnaire {

inline constexpr std::array<std::string_view, 6> kSectionNames = {
    "Introduction", "Understanding Data", "Evaluation",
    "Task Mechanism", "Constraints", "Miscellaneous"};

// Questions tagged with this audience are answered from the dataset catalog.
inline constexpr std::string_view kDataAvailabilityAudience = "data_availability";

enum class AnswerKind { kFreeText, kSingleChoice, kMultiChoice, kNumeric, kBoolean };

std::string_view to_string(AnswerKind kind);
AnswerKind answer_kind_from_string(std::string_view s);
inline bool is_choice(AnswerKind k) {
  return k == AnswerKind::kSingleChoice || k == AnswerKind::kMultiChoice;
}

struct QuestionSpec {
  std::string id;
  std::string section;
  std::string text;
  AnswerKind kind = AnswerKind::kFreeText;
  std::vector<std::string> options;
  bool required = false;
  std::optional<std::string> help_text;
  std::optional<std::string> audience;

  bool operator==(const QuestionSpec&) const = default;
};

struct Section {
  std::string name;
  std::vector<QuestionSpec> questions;

  bool operator==(const Section&) const = default;
};

// Immutable after load; safe to share read-only across threads.
class QuestionnaireSchema {
 public:
  QuestionnaireSchema() = default;
  explicit QuestionnaireSchema(std::vector<Section> sections);

  const std::vector<Section>& sections() const { return sections_; }
  const QuestionSpec* find(std::string_view id) const;
  std::vector<const QuestionSpec*> all_questions() const;
  std::size_t question_count() const;

  bool operator==(const QuestionnaireSchema& other) const { return sections_ == other.sections_; }

 private:
  std::vector<Section> sections_;
  std::map<std::string, std::pair<std::size_t, std::size_t>, std::less<>> index_;
};

// Parses the JSON schema config and enforces every schema invariant.
QuestionnaireSchema load_schema(std::string_view document);
std::string serialize_schema(const QuestionnaireSchema& schema);
const QuestionnaireSchema& default_schema();
std::string_view default_schema_document();

// ----- answers -----

using AnswerValue = std::variant<std::string, std::vector<std::string>, double, bool>;

enum class AnswerSource { kUser, kSmartFill, kSmartFillEdited };
std::string_view to_string(AnswerSource source);
AnswerSource answer_source_from_string(std::string_view s);

struct Answer {
  std::string question_id;
  AnswerValue value;
  AnswerSource source = AnswerSource::kUser;

  bool operator==(const Answer&) const = default;
};

struct AnswerSet {
  std::map<std::string, Answer> answers;
  std::string project_description;

  bool operator==(const AnswerSet&) const = default;
};

bool value_matches_kind(const AnswerValue& value, AnswerKind kind);
nlohmann::json value_to_json(const AnswerValue& value);
// Returns nullopt when the JSON shape does not match the kind.
std::optional<AnswerValue> value_from_json(const nlohmann::json& j, AnswerKind kind);
std::string render_value(const AnswerValue& value);

nlohmann::json answers_to_json(const AnswerSet& answers);
// Shape-level decoding only; values are decoded against the schema's kinds
// when the question is known, otherwise kept as their natural JSON type.
AnswerSet answers_from_json(const nlohmann::json& j, const QuestionnaireSchema& schema);

// Findings: missing_required, type_mismatch, invalid_option, unknown_question.
ValidationReport validate_answers(const QuestionnaireSchema& schema, const AnswerSet& answers);

std::string format_qa(const QuestionnaireSchema& schema, const AnswerSet& answers);

}  // namespace consult::questionnaire
