#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/arxiv/connector.hpp"
#include "consult/arxiv/types.hpp"
#include "consult/llm/gateway.hpp"

namespace consult::context {

enum class Strategy { kAbstractOnly, kFullPaperPdf, kFullPaperText, kSummaries };
std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

inline constexpr std::size_t kDefaultBudget = 100000;
inline constexpr std::size_t kSummaryCap = 3500;
inline constexpr std::string_view kTruncationMarker = " [...]";

struct ContextBlock {
  arxiv::ArxivId id;
  std::string heading;
  std::string body;   // empty for pdf blocks
  std::string bytes;  // pdf blocks only
  std::size_t token_estimate = 0;

  bool is_pdf() const { return !bytes.empty(); }
};

struct ContextBundle {
  Strategy strategy = Strategy::kAbstractOnly;
  std::vector<ContextBlock> blocks;
  std::size_t token_estimate = 0;  // sum over blocks
  std::vector<std::string> warnings;

  std::vector<std::string> ids() const;
  bool empty() const { return blocks.empty(); }
};

// Summary text files keyed by (arxiv id, sha256 of the formatted questionnaire),
// each with a {id, hash, created_at} JSON sidecar.
class SummaryCache {
 public:
  explicit SummaryCache(std::filesystem::path dir);

  std::optional<std::string> get(const arxiv::ArxivId& id, std::string_view qa_hash) const;
  void put(const arxiv::ArxivId& id, std::string_view qa_hash, std::string_view summary) const;
  std::filesystem::path path_for(const arxiv::ArxivId& id, std::string_view qa_hash) const;

 private:
  std::filesystem::path dir_;
};

struct ContextOptions {
  std::size_t budget = kDefaultBudget;
  std::size_t summary_cap = kSummaryCap;
  // Skip papers whose fetch or summary fails instead of aborting the build.
  bool skip_failures = true;
  // Summaries computed concurrently; results are still folded in order.
  int parallelism = 1;
  const SummaryCache* cache = nullptr;
};

std::size_t block_tokens(const ContextBlock& block);

ContextBundle build_abstract_context(const std::vector<arxiv::PaperMetadata>& shortlist,
                                     const ContextOptions& options = {});

// pdf mode takes exactly one id, text mode one or two.
ContextBundle build_fullpaper_context(const std::vector<arxiv::PaperMetadata>& papers, Strategy mode,
                                      arxiv::PaperSource& source, const ContextOptions& options = {});

// Returns at most summary_cap bytes; longer output is cut and ends with the marker.
std::string cap_summary(std::string_view text, std::size_t cap = kSummaryCap);

std::string summarize_paper(std::string_view formatted_qa, const arxiv::SourceBundle& source,
                            llm::Gateway& gateway, std::size_t cap = kSummaryCap);

ContextBundle build_summaries_context(const std::vector<arxiv::PaperMetadata>& shortlist,
                                      std::string_view formatted_qa, arxiv::PaperSource& source,
                                      llm::Gateway& gateway, const ContextOptions& options = {});

void to_json(nlohmann::json& j, const ContextBundle& b);  // pdf bytes as base64

}  // namespace consult::context
