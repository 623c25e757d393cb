#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/llm/gateway.hpp"
#include "consult/questionnaire/schema.hpp"
#include "consult/smartfill/catalog.hpp"

namespace consult::smartfill {

struct Provenance {
  enum class Kind { kInternalKnowledge, kCatalog };
  Kind kind = Kind::kInternalKnowledge;
  std::vector<std::string> entries;  // catalog entry names when kind == kCatalog

  bool operator==(const Provenance&) const = default;
};

struct SmartFillSuggestion {
  std::string question_id;
  questionnaire::AnswerValue proposed_value;
  Provenance provenance;
  std::string rationale;

  bool operator==(const SmartFillSuggestion&) const = default;
};

struct SmartFillResult {
  std::vector<SmartFillSuggestion> suggestions;  // schema order
  bool partial = false;                          // a gateway call failed
  std::vector<std::string> errors;
  std::vector<std::string> warnings;             // dropped proposals
};

struct SmartFillOptions {
  int top_m = 5;
  int max_repair_attempts = 2;
};

// Proposes values for unanswered questions only. General questions use one
// structured call over the project description; data-availability questions
// use a second call grounded in discover_datasets output. A failed call
// leaves the other call's suggestions in place and marks the result partial;
// if every attempted call fails the first error is rethrown.
SmartFillResult suggest_answers(const questionnaire::QuestionnaireSchema& schema,
                                const questionnaire::AnswerSet& answers,
                                const std::vector<DatasetCatalogEntry>& catalog,
                                llm::Gateway& gateway, const SmartFillOptions& options = {});

// Accepted suggestions become answers with source smartfill, or
// smartfill_edited when `edits` overrides the value. Nothing else changes.
questionnaire::AnswerSet apply_suggestions(
    const questionnaire::QuestionnaireSchema& schema, const questionnaire::AnswerSet& answers,
    const std::vector<SmartFillSuggestion>& accepted,
    const std::map<std::string, questionnaire::AnswerValue>& edits);

void to_json(nlohmann::json& j, const SmartFillSuggestion& s);
SmartFillSuggestion suggestion_from_json(const nlohmann::json& j,
                                         const questionnaire::QuestionnaireSchema& schema);
void to_json(nlohmann::json& j, const SmartFillResult& r);

}  // namespace consult::smartfill
