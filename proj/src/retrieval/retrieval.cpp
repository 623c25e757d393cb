#include "consult/retrieval/retrieval.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"
#include "consult/llm/json_schema.hpp"

namespace consult::retrieval {

using nlohmann::json;

namespace {

constexpr const char* kQuerySystem =
    "You are a research assistant who writes arXiv API search queries. Use field prefixes such "
    "as ti:, abs: and cat:, combine terms with AND/OR, quote multi-word phrases, and cover "
    "distinct facets of the task: the core problem, candidate model families, data modality, "
    "evaluation and deployment constraints.";

constexpr const char* kShortlistSystem =
    "You are a research assistant selecting the papers most useful for advising on an AI "
    "project. Judge relevance to the questionnaire response only.";

std::string paper_listing(const arxiv::PaperMetadata& p, bool with_abstract) {
  if (!with_abstract) return fmt::format("[{}] {}\n", p.id.base(), p.title);
  return fmt::format("[{}] {}\n{}\n\n", p.id.base(), p.title, p.abstract);
}

llm::ChatRequest shortlist_request(std::string_view qa, const std::vector<const arxiv::PaperMetadata*>& papers,
                                   int n_limit, bool with_abstract) {
  llm::ChatRequest request;
  request.system_text = kShortlistSystem;
  std::string listing;
  for (const auto* p : papers) listing += paper_listing(*p, with_abstract);
  request.user_text = fmt::format(
      "Questionnaire response:\n{}\n\nCandidate papers:\n{}\nReturn the ids of at most {} papers "
      "most relevant to this project, most relevant first, in \"paper_ids\". Use ids exactly as "
      "shown in brackets.",
      qa, listing, n_limit);
  request.output_schema = llm::string_list_schema("paper_ids");
  return request;
}

// One call; returns pool members in the returned order, capped at n_limit.
std::vector<const arxiv::PaperMetadata*> select(const CandidatePool& pool, std::string_view qa,
                                                const std::vector<const arxiv::PaperMetadata*>& papers,
                                                int n_limit, bool with_abstract, llm::Gateway& gateway,
                                                std::vector<std::string>& warnings) {
  const auto reply = gateway.complete_structured(shortlist_request(qa, papers, n_limit, with_abstract));
  std::vector<const arxiv::PaperMetadata*> out;
  std::set<std::string> taken;
  for (const auto& item : reply["paper_ids"]) {
    const auto raw = item.get<std::string>();
    const auto id = arxiv::ArxivId::parse(raw);
    const bool offered = id && std::any_of(papers.begin(), papers.end(), [&](const auto* p) {
                           return p->id.base() == id->base();
                         });
    if (!offered) {
      warnings.push_back(fmt::format("dropped id '{}': not in the candidate pool", raw));
      continue;
    }
    if (!taken.insert(id->base()).second) continue;
    if (out.size() == static_cast<std::size_t>(n_limit)) {
      warnings.push_back(fmt::format("dropped id '{}': beyond the limit of {}", raw, n_limit));
      continue;
    }
    out.push_back(pool.find(id->base()));
  }
  return out;
}

}  // namespace

const arxiv::PaperMetadata* CandidatePool::find(std::string_view base_id) const {
  for (const auto& p : papers) {
    if (p.id.base() == base_id) return &p;
  }
  return nullptr;
}

std::vector<std::string> clean_queries(const std::vector<std::string>& raw, int k_limit) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& q : raw) {
    if (out.size() >= static_cast<std::size_t>(std::max(k_limit, 0))) break;
    auto cleaned = collapse_whitespace(trim(q));
    if (cleaned.empty()) continue;
    if (seen.insert(to_lower(cleaned)).second) out.push_back(std::move(cleaned));
  }
  return out;
}

QueryPlan generate_queries(std::string_view formatted_qa, int k_limit, llm::Gateway& gateway) {
  if (trim(formatted_qa).empty()) throw Error(ErrorCode::kPrecondition, "formatted questionnaire is empty");
  if (k_limit < 1) throw Error(ErrorCode::kInvalidArgument, "k_limit must be at least 1");
  llm::ChatRequest request;
  request.system_text = kQuerySystem;
  request.user_text = fmt::format(
      "Questionnaire response:\n{}\n\nWrite up to {} distinct arXiv search queries that would "
      "find papers relevant to designing a solution for this project. Return them in \"queries\".",
      formatted_qa, k_limit);
  request.output_schema = llm::string_list_schema("queries");
  const auto reply = gateway.complete_structured(request);
  QueryPlan plan;
  plan.k_limit = k_limit;
  plan.queries = clean_queries(reply["queries"].get<std::vector<std::string>>(), k_limit);
  if (plan.queries.empty()) throw Error(ErrorCode::kNoQueries, "no usable queries after cleaning");
  return plan;
}

CandidatePool run_searches(const QueryPlan& plan, int per_query_max, arxiv::PaperSource& source) {
  if (per_query_max < 1) throw Error(ErrorCode::kInvalidArgument, "per_query_max must be at least 1");
  CandidatePool pool;
  std::vector<std::string> causes;
  for (std::size_t i = 0; i < plan.queries.size(); ++i) {
    std::vector<arxiv::PaperMetadata> results;
    try {
      results = source.search(plan.queries[i], per_query_max);
    } catch (const Error& e) {
      auto cause = fmt::format("query {} '{}' failed: {}", i, plan.queries[i], e.what());
      spdlog::warn("{}", cause);
      causes.push_back(cause);
      continue;
    }
    for (auto& paper : results) {
      auto& origins = pool.provenance[paper.id.base()];
      if (origins.empty()) pool.papers.push_back(std::move(paper));
      origins.insert(i);
    }
  }
  if (!plan.queries.empty() && causes.size() == plan.queries.size()) {
    throw Error(ErrorCode::kRetrievalFailed, "every search query failed", causes);
  }
  pool.warnings = std::move(causes);
  return pool;
}

ShortList shortlist(const CandidatePool& pool, std::string_view formatted_qa, llm::Gateway& gateway,
                    const ShortlistOptions& options) {
  if (pool.papers.empty()) throw Error(ErrorCode::kPrecondition, "candidate pool is empty");
  if (options.n_limit < 1) throw Error(ErrorCode::kInvalidArgument, "n_limit must be at least 1");
  const std::size_t guard =
      options.token_guard > 0 ? options.token_guard : gateway.config().token_limit / 2;

  std::vector<const arxiv::PaperMetadata*> all;
  for (const auto& p : pool.papers) all.push_back(&p);

  // Greedy packing in pool order; a paper that alone exceeds the guard still
  // gets a batch of its own and the gateway's hard limit decides.
  const std::size_t overhead = estimate_request_tokens(shortlist_request(formatted_qa, {}, options.n_limit, true));
  std::vector<std::vector<const arxiv::PaperMetadata*>> batches(1);
  std::size_t used = overhead;
  for (const auto* p : all) {
    const std::size_t cost = estimate_tokens(paper_listing(*p, true));
    if (!batches.back().empty() && used + cost > guard) {
      batches.emplace_back();
      used = overhead;
    }
    batches.back().push_back(p);
    used += cost;
  }

  ShortList out;
  out.n_limit = options.n_limit;
  out.batches = batches.size();
  std::vector<const arxiv::PaperMetadata*> chosen;
  if (batches.size() == 1) {
    chosen = select(pool, formatted_qa, all, options.n_limit, true, gateway, out.warnings);
  } else {
    std::vector<const arxiv::PaperMetadata*> survivors;
    for (const auto& batch : batches) {
      for (const auto* p : select(pool, formatted_qa, batch, options.n_limit, true, gateway, out.warnings)) {
        survivors.push_back(p);
      }
    }
    if (!survivors.empty()) {
      // Abstracts were already judged per batch; the merge sees titles only.
      chosen = select(pool, formatted_qa, survivors, options.n_limit, false, gateway, out.warnings);
    }
  }
  if (chosen.empty()) {
    throw Error(ErrorCode::kEmptyShortlist, "no returned id matched the candidate pool", out.warnings);
  }
  for (const auto* p : chosen) out.papers.push_back(*p);
  return out;
}

void to_json(json& j, const QueryPlan& p) { j = {{"queries", p.queries}, {"k_limit", p.k_limit}}; }

void to_json(json& j, const CandidatePool& p) {
  json prov = json::object();
  for (const auto& [id, origins] : p.provenance) prov[id] = origins;
  j = {{"papers", p.papers}, {"provenance", prov}, {"warnings", p.warnings}};
}

void to_json(json& j, const ShortList& s) {
  j = {{"papers", s.papers}, {"n_limit", s.n_limit}, {"warnings", s.warnings}, {"batches", s.batches}};
}

ShortList shortlist_from_json(const json& j) {
  ShortList s;
  for (const auto& p : j.at("papers")) s.papers.push_back(arxiv::paper_from_json(p));
  s.n_limit = j.value("n_limit", kDefaultShortlistLimit);
  s.warnings = j.value("warnings", std::vector<std::string>{});
  s.batches = j.value("batches", std::size_t{1});
  return s;
}

}  // namespace consult::retrieval
