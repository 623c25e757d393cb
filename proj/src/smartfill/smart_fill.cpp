#include "consult/smartfill/smart_fill.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"

namespace consult::smartfill {

using nlohmann::json;
namespace qn = questionnaire;

namespace {

json answers_schema(bool with_datasets) {
  json item = {{"type", "object"},
               {"properties",
                {{"question_id", {{"type", "string"}}},
                 {"value", json::object()},
                 {"rationale", {{"type", "string"}}}}},
               {"required", {"question_id", "value"}}};
  if (with_datasets) {
    item["properties"]["datasets"] = {{"type", "array"}, {"items", {{"type", "string"}}}};
  }
  return {{"type", "object"},
          {"properties", {{"answers", {{"type", "array"}, {"items", item}}}}},
          {"required", {"answers"}}};
}

std::string describe_questions(const std::vector<const qn::QuestionSpec*>& questions) {
  std::string out;
  for (const auto* q : questions) {
    out += fmt::format("- id: {}\n  kind: {}\n  question: {}\n", q->id, qn::to_string(q->kind), q->text);
    if (!q->options.empty()) out += fmt::format("  options: {}\n", json(q->options).dump());
  }
  return out;
}

constexpr const char* kKindRules =
    "Value types: free_text and single_choice -> string (single_choice must be one of the "
    "options); multi_choice -> array of option strings; numeric -> number; boolean -> true or "
    "false. Omit questions you cannot reasonably infer.";

bool within_options(const qn::QuestionSpec& q, const qn::AnswerValue& v) {
  const auto allowed = [&](const std::string& s) {
    return std::find(q.options.begin(), q.options.end(), s) != q.options.end();
  };
  if (q.kind == qn::AnswerKind::kSingleChoice) return allowed(std::get<std::string>(v));
  if (q.kind == qn::AnswerKind::kMultiChoice) {
    const auto& items = std::get<std::vector<std::string>>(v);
    return std::all_of(items.begin(), items.end(), allowed);
  }
  return true;
}

struct CallOutcome {
  std::vector<SmartFillSuggestion> suggestions;
  std::vector<std::string> warnings;
};

CallOutcome interpret(const json& reply, const std::vector<const qn::QuestionSpec*>& asked,
                      const std::vector<RankedDataset>* discovered,
                      const std::vector<DatasetCatalogEntry>& catalog) {
  CallOutcome out;
  std::set<std::string> seen;
  for (const auto& item : reply["answers"]) {
    const auto id = item["question_id"].get<std::string>();
    const auto it = std::find_if(asked.begin(), asked.end(),
                                 [&](const qn::QuestionSpec* q) { return q->id == id; });
    if (it == asked.end()) {
      out.warnings.push_back(fmt::format("dropped proposal for '{}': not requested", id));
      continue;
    }
    if (!seen.insert(id).second) continue;
    const auto& q = **it;
    auto value = qn::value_from_json(item["value"], q.kind);
    if (!value || !qn::value_matches_kind(*value, q.kind) || !within_options(q, *value)) {
      out.warnings.push_back(fmt::format("dropped proposal for '{}': value does not fit a {} question",
                                         id, qn::to_string(q.kind)));
      continue;
    }
    SmartFillSuggestion s{id, std::move(*value), {}, item.value("rationale", "")};
    if (discovered != nullptr) {
      s.provenance.kind = Provenance::Kind::kCatalog;
      for (const auto& name : item.value("datasets", json::array())) {
        const auto n = name.get<std::string>();
        const bool known = std::any_of(catalog.begin(), catalog.end(),
                                       [&](const DatasetCatalogEntry& e) { return e.name == n; });
        if (known && std::find(s.provenance.entries.begin(), s.provenance.entries.end(), n) ==
                         s.provenance.entries.end()) {
          s.provenance.entries.push_back(n);
        }
      }
      if (s.provenance.entries.empty()) {
        for (const auto& r : *discovered) s.provenance.entries.push_back(r.entry.name);
      }
    }
    out.suggestions.push_back(std::move(s));
  }
  return out;
}

}  // namespace

SmartFillResult suggest_answers(const qn::QuestionnaireSchema& schema, const qn::AnswerSet& answers,
                                const std::vector<DatasetCatalogEntry>& catalog, llm::Gateway& gateway,
                                const SmartFillOptions& options) {
  if (trim(answers.project_description).empty()) {
    throw Error(ErrorCode::kPrecondition, "smart fill needs a non-empty project description");
  }
  std::vector<const qn::QuestionSpec*> general;
  std::vector<const qn::QuestionSpec*> data;
  for (const auto* q : schema.all_questions()) {
    if (answers.answers.count(q->id)) continue;
    (q->audience == qn::kDataAvailabilityAudience ? data : general).push_back(q);
  }

  SmartFillResult result;
  std::vector<Error> failures;

  if (!general.empty()) {
    llm::ChatRequest request;
    request.system_text =
        "You help practitioners complete a questionnaire that captures an AI project's "
        "requirements. Use your own knowledge and reasoning about the project.";
    request.user_text = fmt::format(
        "Project description:\n{}\n\nPropose answers for these unanswered questions. {}\n\n{}",
        trim(answers.project_description), kKindRules, describe_questions(general));
    request.output_schema = answers_schema(false);
    try {
      auto outcome = interpret(gateway.complete_structured(request, options.max_repair_attempts),
                               general, nullptr, catalog);
      result.suggestions = std::move(outcome.suggestions);
      result.warnings = std::move(outcome.warnings);
    } catch (const Error& e) {
      failures.push_back(e);
    }
  }

  if (!data.empty()) {
    const auto discovered = discover_datasets(answers.project_description, catalog, options.top_m);
    std::string listing;
    for (const auto& r : discovered) {
      std::vector<std::string> cols;
      for (const auto& c : r.entry.columns) cols.push_back(fmt::format("{} ({})", c.name, to_string(c.kind)));
      listing += fmt::format("- {} [relevance {:.3f}]: {}; columns: {}; rows: {}; location: {}\n",
                             r.entry.name, r.score, r.entry.description, fmt::join(cols, ", "),
                             r.entry.row_count, r.entry.location_uri);
    }
    if (listing.empty()) listing = "(the catalog has no datasets)\n";
    llm::ChatRequest request;
    request.system_text =
        "You assess data availability for AI projects using dataset catalog metadata only.";
    request.user_text = fmt::format(
        "Project description:\n{}\n\nCandidate datasets from the catalog:\n{}\n"
        "Answer these data availability questions. For each answer list the catalog dataset "
        "names you relied on in \"datasets\". {}\n\n{}",
        trim(answers.project_description), listing, kKindRules, describe_questions(data));
    request.output_schema = answers_schema(true);
    try {
      auto outcome = interpret(gateway.complete_structured(request, options.max_repair_attempts),
                               data, &discovered, catalog);
      for (auto& s : outcome.suggestions) result.suggestions.push_back(std::move(s));
      for (auto& w : outcome.warnings) result.warnings.push_back(std::move(w));
    } catch (const Error& e) {
      failures.push_back(e);
    }
  }

  const std::size_t attempted = (general.empty() ? 0 : 1) + (data.empty() ? 0 : 1);
  if (attempted > 0 && failures.size() == attempted) throw failures.front();
  for (const auto& f : failures) {
    result.partial = true;
    result.errors.push_back(fmt::format("{}: {}", to_string(f.code()), f.what()));
  }

  std::map<std::string, std::size_t> order;
  for (const auto* q : schema.all_questions()) order.emplace(q->id, order.size());
  std::stable_sort(result.suggestions.begin(), result.suggestions.end(),
                   [&](const SmartFillSuggestion& a, const SmartFillSuggestion& b) {
                     return order.at(a.question_id) < order.at(b.question_id);
                   });
  return result;
}

qn::AnswerSet apply_suggestions(const qn::QuestionnaireSchema& schema, const qn::AnswerSet& answers,
                                const std::vector<SmartFillSuggestion>& accepted,
                                const std::map<std::string, qn::AnswerValue>& edits) {
  std::set<std::string> accepted_ids;
  for (const auto& s : accepted) {
    if (schema.find(s.question_id) == nullptr) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("suggestion references unknown question '{}'", s.question_id));
    }
    accepted_ids.insert(s.question_id);
  }
  for (const auto& [id, value] : edits) {
    if (!accepted_ids.count(id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("edit for '{}' has no accepted suggestion", id));
    }
    const auto* q = schema.find(id);
    if (!qn::value_matches_kind(value, q->kind)) {
      throw Error(ErrorCode::kTypeError,
                  fmt::format("edit for '{}' must be a {} value", id, qn::to_string(q->kind)), {id});
    }
  }
  qn::AnswerSet out = answers;
  for (const auto& s : accepted) {
    const auto edit = edits.find(s.question_id);
    if (edit != edits.end()) {
      out.answers[s.question_id] = {s.question_id, edit->second, qn::AnswerSource::kSmartFillEdited};
    } else {
      out.answers[s.question_id] = {s.question_id, s.proposed_value, qn::AnswerSource::kSmartFill};
    }
  }
  return out;
}

void to_json(json& j, const SmartFillSuggestion& s) {
  j = {{"question_id", s.question_id},
       {"proposed_value", qn::value_to_json(s.proposed_value)},
       {"rationale", s.rationale}};
  if (s.provenance.kind == Provenance::Kind::kCatalog) {
    j["provenance"] = {{"kind", "catalog"}, {"entries", s.provenance.entries}};
  } else {
    j["provenance"] = {{"kind", "internal_knowledge"}};
  }
}

SmartFillSuggestion suggestion_from_json(const json& j, const qn::QuestionnaireSchema& schema) {
  SmartFillSuggestion s;
  s.question_id = j.at("question_id").get<std::string>();
  const auto* q = schema.find(s.question_id);
  if (q == nullptr) throw Error(ErrorCode::kInvalidArgument, "unknown question " + s.question_id);
  auto value = qn::value_from_json(j.at("proposed_value"), q->kind);
  if (!value) throw Error(ErrorCode::kTypeError, "suggestion value does not match " + s.question_id);
  s.proposed_value = std::move(*value);
  s.rationale = j.value("rationale", "");
  const auto prov = j.value("provenance", json::object());
  if (prov.value("kind", "") == "catalog") {
    s.provenance.kind = Provenance::Kind::kCatalog;
    s.provenance.entries = prov.value("entries", std::vector<std::string>{});
  }
  return s;
}

void to_json(json& j, const SmartFillResult& r) {
  j = {{"suggestions", r.suggestions}, {"partial", r.partial}, {"errors", r.errors},
       {"warnings", r.warnings}};
}

}  // namespace consult::smartfill
