#include "consult/questionnaire/schema.hpp"

#include <random>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "consult/common/error.hpp"

namespace consult::questionnaire {
namespace {

using ::testing::ElementsAreArray;
using ::testing::HasSubstr;
using nlohmann::json;

json minimal_config() {
  json sections = json::array();
  for (const auto name : kSectionNames) {
    sections.push_back({{"name", name},
                        {"questions", json::array({{{"id", "q_" + std::string(name.substr(0, 3))},
                                                    {"text", "About " + std::string(name)},
                                                    {"kind", "free_text"}}})}});
  }
  return {{"version", 1}, {"sections", sections}};
}

std::string error_message(const std::string& doc) {
  try {
    load_schema(doc);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(LoadSchema, DefaultHasSixSectionsInOrder) {
  const auto& schema = default_schema();
  ASSERT_EQ(schema.sections().size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(schema.sections()[i].name, kSectionNames[i]);
  EXPECT_GE(schema.question_count(), 25u);
  EXPECT_LE(schema.question_count(), 40u);
  for (const auto& s : schema.sections()) EXPECT_FALSE(s.questions.empty());
}

TEST(LoadSchema, DefaultTagsDataAvailabilityQuestions) {
  int tagged = 0;
  for (const auto* q : default_schema().all_questions()) {
    if (q->audience == kDataAvailabilityAudience) {
      ++tagged;
      EXPECT_EQ(q->section, "Understanding Data");
    }
  }
  EXPECT_GE(tagged, 1);
}

TEST(LoadSchema, RejectsWrongSectionCount) {
  auto cfg = minimal_config();
  cfg["sections"].erase(cfg["sections"].begin() + 5);
  EXPECT_THAT(error_message(cfg.dump()), HasSubstr("section count must be 6"));
}

TEST(LoadSchema, RejectsWrongSectionName) {
  auto cfg = minimal_config();
  cfg["sections"][2]["name"] = "Metrics";
  EXPECT_THAT(error_message(cfg.dump()), HasSubstr("Evaluation"));
}

TEST(LoadSchema, RejectsDuplicateIds) {
  auto cfg = minimal_config();
  cfg["sections"][0]["questions"][0]["id"] = "kpi";
  cfg["sections"][3]["questions"][0]["id"] = "kpi";
  EXPECT_THAT(error_message(cfg.dump()), HasSubstr("duplicate question id 'kpi'"));
}

TEST(LoadSchema, RejectsChoiceWithoutOptions) {
  auto cfg = minimal_config();
  cfg["sections"][1]["questions"][0]["kind"] = "single_choice";
  EXPECT_THAT(error_message(cfg.dump()), HasSubstr("without options"));
}

TEST(LoadSchema, RejectsEmptySectionAndBadJson) {
  auto cfg = minimal_config();
  cfg["sections"][4]["questions"] = json::array();
  EXPECT_THAT(error_message(cfg.dump()), HasSubstr("at least one question"));
  EXPECT_THAT(error_message("{\"sections\": ["), HasSubstr("not valid JSON"));
}

TEST(LoadSchema, SerializeRoundTripIsFixedPoint) {
  const auto& schema = default_schema();
  const auto text1 = serialize_schema(schema);
  const auto reloaded = load_schema(text1);
  EXPECT_EQ(reloaded, schema);
  EXPECT_EQ(serialize_schema(reloaded), text1);
}

TEST(ValidateAnswers, EmptySetReportsExactlyRequiredAsMissing) {
  const auto& schema = default_schema();
  const auto report = validate_answers(schema, AnswerSet{});
  std::set<std::string> required;
  for (const auto* q : schema.all_questions()) {
    if (q->required) required.insert(q->id);
  }
  EXPECT_EQ(report.subjects_with("missing_required"), required);
  EXPECT_EQ(report.findings.size(), required.size());
}

AnswerSet complete_answers(const QuestionnaireSchema& schema) {
  AnswerSet set;
  for (const auto* q : schema.all_questions()) {
    if (!q->required) continue;
    AnswerValue v;
    switch (q->kind) {
      case AnswerKind::kFreeText: v = std::string("something"); break;
      case AnswerKind::kSingleChoice: v = q->options.front(); break;
      case AnswerKind::kMultiChoice: v = std::vector<std::string>{q->options.front()}; break;
      case AnswerKind::kNumeric: v = 3.0; break;
      case AnswerKind::kBoolean: v = true; break;
    }
    set.answers[q->id] = Answer{q->id, v, AnswerSource::kUser};
  }
  return set;
}

TEST(ValidateAnswers, CompleteWellTypedIsEmpty) {
  const auto& schema = default_schema();
  EXPECT_TRUE(validate_answers(schema, complete_answers(schema)).empty());
}

TEST(ValidateAnswers, NumericAnsweredWithTextIsTypeMismatch) {
  const auto& schema = default_schema();
  auto set = complete_answers(schema);
  set.answers["latency_budget_ms"] = Answer{"latency_budget_ms", std::string("fast")};
  const auto report = validate_answers(schema, set);
  ASSERT_EQ(report.findings.size(), 1u);
  EXPECT_EQ(report.findings[0].code, "type_mismatch");
  EXPECT_EQ(report.findings[0].subject, "latency_budget_ms");
}

TEST(ValidateAnswers, UnknownIdIsReported) {
  const auto& schema = default_schema();
  auto set = complete_answers(schema);
  set.answers["no_such_question"] = Answer{"no_such_question", std::string("x")};
  const auto report = validate_answers(schema, set);
  ASSERT_EQ(report.findings.size(), 1u);
  EXPECT_EQ(report.findings[0].code, "unknown_question");
}

TEST(ValidateAnswers, ChoiceOutsideOptionsIsReported) {
  const auto& schema = default_schema();
  auto set = complete_answers(schema);
  set.answers["cost_sensitivity"] = Answer{"cost_sensitivity", std::string("extreme")};
  EXPECT_EQ(validate_answers(schema, set).count("invalid_option"), 1u);
}

std::vector<std::string> a_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("A: ", 0) == 0) out.push_back(line);
  }
  return out;
}

TEST(FormatQa, EmptySetRendersEveryQuestionUnanswered) {
  const auto& schema = default_schema();
  const auto lines = a_lines(format_qa(schema, AnswerSet{}));
  ASSERT_EQ(lines.size(), schema.question_count());
  for (const auto& l : lines) EXPECT_EQ(l, "A: UNANSWERED");
}

TEST(FormatQa, SingleAnswerChangesExactlyOneLine) {
  const auto& schema = default_schema();
  AnswerSet set;
  set.answers["metrics"] = Answer{"metrics", std::string("AUC-ROC")};
  const auto empty_lines = a_lines(format_qa(schema, AnswerSet{}));
  const auto lines = a_lines(format_qa(schema, set));
  ASSERT_EQ(lines.size(), empty_lines.size());
  int differing = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) differing += lines[i] != empty_lines[i];
  EXPECT_EQ(differing, 1);
  EXPECT_THAT(format_qa(schema, set), HasSubstr("A: AUC-ROC\n"));
}

TEST(FormatQa, DeterministicAndEveryQuestionOnceInOrder) {
  const auto& schema = default_schema();
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    AnswerSet set;
    for (const auto* q : schema.all_questions()) {
      if (rng() % 2 == 0) continue;
      switch (q->kind) {
        case AnswerKind::kNumeric: set.answers[q->id] = {q->id, double(rng() % 1000)}; break;
        case AnswerKind::kBoolean: set.answers[q->id] = {q->id, rng() % 2 == 0}; break;
        case AnswerKind::kMultiChoice:
          set.answers[q->id] = {q->id, std::vector<std::string>{q->options[rng() % q->options.size()]}};
          break;
        default: set.answers[q->id] = {q->id, "answer " + std::to_string(rng() % 100)}; break;
      }
    }
    const auto text = format_qa(schema, set);
    EXPECT_EQ(text, format_qa(schema, set));
    std::size_t cursor = 0;
    for (const auto* q : schema.all_questions()) {
      const auto needle = "Q: " + q->text + "\n";
      const auto pos = text.find(needle, cursor);
      ASSERT_NE(pos, std::string::npos) << q->id;
      EXPECT_EQ(text.find(needle, pos + 1), std::string::npos);
      cursor = pos + needle.size();
    }
  }
}

TEST(FormatQa, RendersValueKinds) {
  EXPECT_EQ(render_value(AnswerValue{5.0}), "5");
  EXPECT_EQ(render_value(AnswerValue{2.5}), "2.5");
  EXPECT_EQ(render_value(AnswerValue{true}), "Yes");
  EXPECT_EQ(render_value(AnswerValue{std::vector<std::string>{"text", "image"}}), "text, image");
}

TEST(AnswersJson, RoundTrip) {
  const auto& schema = default_schema();
  auto set = complete_answers(schema);
  set.project_description = "classify pharmacy claims";
  set.answers["metrics"] = Answer{"metrics", std::string("precision"), AnswerSource::kSmartFillEdited};
  EXPECT_EQ(answers_from_json(answers_to_json(set), schema), set);
}

}  // namespace
}  // namespace consult::questionnaire
