#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/common/report.hpp"
#include "consult/context/context.hpp"
#include "consult/llm/gateway.hpp"

namespace consult::recommend {

inline constexpr std::string_view kBestSolutionHeading = "## Best Solution";
inline constexpr std::string_view kStrongBaselineHeading = "## Strong Baseline";
inline constexpr std::string_view kNoResponse = "(no response)";

struct RecSection {
  std::string description;
  std::string step_by_step;
  std::string coding_details;
  std::string justification;
  std::string references;

  bool operator==(const RecSection&) const = default;
};

struct RecommendationDoc {
  std::string thinking;
  RecSection best_solution;
  RecSection strong_baseline;
  std::string raw_markdown;
  context::Strategy context_strategy = context::Strategy::kAbstractOnly;
  std::vector<std::string> evidence_ids;
};

// The bundled prompt template with {formatted_qa} and {summaries_str} slots.
std::string_view prompt_template();

// Context goes into the summaries slot for every strategy, behind a heading
// line naming the strategy actually used.
std::string render_context(const context::ContextBundle& bundle);
std::string render_prompt(std::string_view formatted_qa, const context::ContextBundle& bundle);

// One gateway call. PDF blocks travel as attachments. Returns the reply untouched.
std::string generate(std::string_view formatted_qa, const context::ContextBundle& bundle,
                     llm::Gateway& gateway);

// Throws kRecommendationParse naming a missing, duplicated or misordered heading.
RecommendationDoc parse_recommendation(std::string_view raw);

// Canonical markdown for a document; parse_recommendation inverts it.
std::string render_recommendation(const RecommendationDoc& doc);

// Advisory only. Codes: placeholder_citation, unmatched_citation.
std::vector<Finding> lint_citations(const RecommendationDoc& doc);

void to_json(nlohmann::json& j, const RecSection& s);
void to_json(nlohmann::json& j, const RecommendationDoc& d);
RecommendationDoc recommendation_from_json(const nlohmann::json& j);

// <dir>/recommendation.md plus <dir>/recommendation.json
void save_recommendation(const std::filesystem::path& dir, const RecommendationDoc& doc);
RecommendationDoc load_recommendation(const std::filesystem::path& dir);

}  // namespace consult::recommend
