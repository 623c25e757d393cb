#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/arxiv/connector.hpp"
#include "consult/arxiv/types.hpp"
#include "consult/llm/gateway.hpp"

namespace consult::retrieval {

inline constexpr int kDefaultQueryLimit = 50;
inline constexpr int kDefaultShortlistLimit = 50;
inline constexpr int kDefaultPerQueryMax = 10;

struct QueryPlan {
  std::vector<std::string> queries;
  int k_limit = kDefaultQueryLimit;
};

struct CandidatePool {
  std::vector<arxiv::PaperMetadata> papers;
  // base arxiv id -> indices of the queries that returned it
  std::map<std::string, std::set<std::size_t>> provenance;
  std::vector<std::string> warnings;

  const arxiv::PaperMetadata* find(std::string_view base_id) const;
};

struct ShortList {
  std::vector<arxiv::PaperMetadata> papers;
  int n_limit = kDefaultShortlistLimit;
  std::vector<std::string> warnings;
  std::size_t batches = 1;  // > 1 when the pool did not fit one call
};

// Trims, drops case-folded duplicates and truncates to k_limit.
std::vector<std::string> clean_queries(const std::vector<std::string>& raw, int k_limit);

QueryPlan generate_queries(std::string_view formatted_qa, int k_limit, llm::Gateway& gateway);

// Queries run in index order; the merge keeps the first occurrence of each
// base id. Single-query failures become warnings unless all of them fail.
CandidatePool run_searches(const QueryPlan& plan, int per_query_max, arxiv::PaperSource& source);

struct ShortlistOptions {
  int n_limit = kDefaultShortlistLimit;
  // Prompt token ceiling per call. 0 means half the gateway's token limit.
  std::size_t token_guard = 0;
};

ShortList shortlist(const CandidatePool& pool, std::string_view formatted_qa, llm::Gateway& gateway,
                    const ShortlistOptions& options = {});

void to_json(nlohmann::json& j, const QueryPlan& p);
void to_json(nlohmann::json& j, const CandidatePool& p);
void to_json(nlohmann::json& j, const ShortList& s);
ShortList shortlist_from_json(const nlohmann::json& j);

}  // namespace consult::retrieval
