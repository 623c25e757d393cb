#include "consult/context/context.hpp"

#include <future>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"
#include "consult/common/text.hpp"

namespace consult::context {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kAbstractOnly: return "abstract_only";
    case Strategy::kFullPaperPdf: return "full_paper_pdf";
    case Strategy::kFullPaperText: return "full_paper_text";
    case Strategy::kSummaries: return "summaries";
  }
  return "abstract_only";
}

Strategy strategy_from_string(std::string_view s) {
  for (auto v : {Strategy::kAbstractOnly, Strategy::kFullPaperPdf, Strategy::kFullPaperText, Strategy::kSummaries}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown context strategy '{}'", s),
              {"abstract_only", "full_paper_pdf", "full_paper_text", "summaries"});
}

std::vector<std::string> ContextBundle::ids() const {
  std::vector<std::string> out;
  for (const auto& b : blocks) out.push_back(b.id.canonical());
  return out;
}

std::size_t block_tokens(const ContextBlock& block) {
  return block.is_pdf() ? estimate_tokens_for_bytes(block.bytes.size())
                        : estimate_tokens(block.heading) + estimate_tokens(block.body);
}

namespace {

ContextBlock text_block(const arxiv::PaperMetadata& p, std::string body) {
  ContextBlock b{p.id, p.title, std::move(body), {}, 0};
  b.token_estimate = block_tokens(b);
  return b;
}

std::string id_line(const arxiv::PaperMetadata& p) {
  return fmt::format("arXiv ID: {} ({})", p.id.canonical(), p.id.abs_url());
}

// Keeps the longest prefix of blocks within budget; the rest are dropped with a warning.
void append_within_budget(ContextBundle& bundle, std::vector<ContextBlock> blocks, std::size_t budget) {
  std::vector<std::string> dropped;
  for (auto& b : blocks) {
    if (!dropped.empty() || bundle.token_estimate + b.token_estimate > budget) {
      dropped.push_back(b.id.canonical());
      continue;
    }
    bundle.token_estimate += b.token_estimate;
    bundle.blocks.push_back(std::move(b));
  }
  if (!dropped.empty()) {
    bundle.warnings.push_back(fmt::format("context budget of {} tokens exceeded; dropped {}", budget,
                                          fmt::join(dropped, ", ")));
  }
}

std::string sidecar_name(const arxiv::ArxivId& id, std::string_view qa_hash) {
  std::string base = id.canonical();
  for (auto& c : base) {
    if (c == '/') c = '_';
  }
  return fmt::format("{}-{}", base, qa_hash.substr(0, 16));
}

}  // namespace

SummaryCache::SummaryCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path SummaryCache::path_for(const arxiv::ArxivId& id, std::string_view qa_hash) const {
  return dir_ / (sidecar_name(id, qa_hash) + ".txt");
}

std::optional<std::string> SummaryCache::get(const arxiv::ArxivId& id, std::string_view qa_hash) const {
  const auto text = path_for(id, qa_hash);
  auto meta_path = text;
  meta_path.replace_extension(".json");
  if (!fs::exists(text) || !fs::exists(meta_path)) return std::nullopt;
  try {
    const auto meta = json::parse(read_file(meta_path));
    if (meta.value("id", "") != id.canonical() || meta.value("hash", "") != qa_hash) return std::nullopt;
  } catch (const json::exception&) {
    return std::nullopt;
  }
  return read_file(text);
}

void SummaryCache::put(const arxiv::ArxivId& id, std::string_view qa_hash, std::string_view summary) const {
  const auto text = path_for(id, qa_hash);
  auto meta_path = text;
  meta_path.replace_extension(".json");
  write_file_atomic(text, summary);
  write_file_atomic(meta_path,
                    json{{"id", id.canonical()}, {"hash", qa_hash}, {"created_at", utc_timestamp()}}.dump(2) + "\n");
}

ContextBundle build_abstract_context(const std::vector<arxiv::PaperMetadata>& shortlist,
                                     const ContextOptions& options) {
  if (shortlist.empty()) throw Error(ErrorCode::kPrecondition, "shortlist is empty");
  ContextBundle bundle;
  bundle.strategy = Strategy::kAbstractOnly;
  std::vector<ContextBlock> blocks;
  for (const auto& p : shortlist) {
    blocks.push_back(text_block(p, fmt::format("Title: {}\n{}\nAbstract: {}", p.title, id_line(p), p.abstract)));
  }
  append_within_budget(bundle, std::move(blocks), options.budget);
  if (bundle.empty()) throw Error(ErrorCode::kContextEmpty, "no abstract fits the context budget", bundle.warnings);
  return bundle;
}

ContextBundle build_fullpaper_context(const std::vector<arxiv::PaperMetadata>& papers, Strategy mode,
                                      arxiv::PaperSource& source, const ContextOptions& options) {
  ContextBundle bundle;
  bundle.strategy = mode;
  if (mode == Strategy::kFullPaperPdf) {
    if (papers.size() != 1) {
      throw Error(ErrorCode::kPrecondition,
                  fmt::format("pdf mode takes exactly one paper, got {}", papers.size()));
    }
    ContextBlock b{papers[0].id, papers[0].title, {}, source.fetch_pdf(papers[0].id), 0};
    b.token_estimate = block_tokens(b);
    if (b.token_estimate > options.budget) {
      throw Error(ErrorCode::kTokenLimit, fmt::format("pdf for {} needs ~{} tokens, budget is {}",
                                                      b.id.canonical(), b.token_estimate, options.budget));
    }
    bundle.token_estimate = b.token_estimate;
    bundle.blocks.push_back(std::move(b));
    return bundle;
  }
  if (mode != Strategy::kFullPaperText) {
    throw Error(ErrorCode::kInvalidArgument, "full paper context needs pdf or text mode");
  }
  if (papers.empty() || papers.size() > 2) {
    throw Error(ErrorCode::kPrecondition, fmt::format("text mode takes one or two papers, got {}", papers.size()));
  }
  std::vector<ContextBlock> blocks;
  for (const auto& p : papers) {
    auto src = source.fetch_source(p.id);
    if (src.kind == arxiv::SourceKind::kPdfBytes) {
      throw Error(ErrorCode::kSourceUnavailable,
                  fmt::format("no text source for {}: only pdf bytes are available", p.id.canonical()));
    }
    blocks.push_back(text_block(p, fmt::format("Title: {}\n{}\nSource ({}):\n{}", p.title, id_line(p),
                                               arxiv::to_string(src.kind), src.text)));
  }
  if (blocks.front().token_estimate > options.budget) {
    throw Error(ErrorCode::kTokenLimit, fmt::format("{} needs ~{} tokens, budget is {}",
                                                    blocks.front().id.canonical(),
                                                    blocks.front().token_estimate, options.budget));
  }
  append_within_budget(bundle, std::move(blocks), options.budget);
  return bundle;
}

std::string cap_summary(std::string_view text, std::size_t cap) {
  if (text.size() <= cap) return std::string(text);
  if (cap <= kTruncationMarker.size()) return utf8_prefix(kTruncationMarker, cap);
  return utf8_prefix(text, cap - kTruncationMarker.size()) + std::string(kTruncationMarker);
}

std::string summarize_paper(std::string_view formatted_qa, const arxiv::SourceBundle& source,
                            llm::Gateway& gateway, std::size_t cap) {
  if (source.empty()) throw Error(ErrorCode::kPrecondition, "paper source is empty");
  llm::ChatRequest request;
  request.system_text =
      "You write one-page, task-specific summaries of research papers for a consultant advising "
      "on an AI project.";
  std::string content;
  if (source.kind == arxiv::SourceKind::kPdfBytes) {
    request.attachments.push_back({source.bytes, llm::MediaKind::kPdf});
    content = "The paper is attached as a PDF.";
  } else {
    content = fmt::format("Paper content ({}):\n{}", arxiv::to_string(source.kind), source.text);
  }
  request.user_text = fmt::format(
      "Questionnaire response:\n{}\n\n{}\n\nSummarize this paper ({}) in at most one page, focusing "
      "on the methods, data, results and limitations that matter for this project.",
      formatted_qa, content, source.id.canonical());
  return cap_summary(gateway.complete(request), cap);
}

ContextBundle build_summaries_context(const std::vector<arxiv::PaperMetadata>& shortlist,
                                      std::string_view formatted_qa, arxiv::PaperSource& source,
                                      llm::Gateway& gateway, const ContextOptions& options) {
  if (shortlist.empty()) throw Error(ErrorCode::kPrecondition, "shortlist is empty");
  const auto qa_hash = sha256_hex(formatted_qa);

  auto one = [&](const arxiv::PaperMetadata& p) -> std::string {
    if (options.cache != nullptr) {
      if (auto hit = options.cache->get(p.id, qa_hash)) return *hit;
    }
    auto summary = summarize_paper(formatted_qa, source.fetch_source(p.id), gateway, options.summary_cap);
    if (options.cache != nullptr) options.cache->put(p.id, qa_hash, summary);
    return summary;
  };

  std::vector<std::optional<std::string>> summaries(shortlist.size());
  std::vector<std::string> failures(shortlist.size());
  const std::size_t width = static_cast<std::size_t>(std::max(options.parallelism, 1));
  for (std::size_t start = 0; start < shortlist.size(); start += width) {
    std::vector<std::future<std::string>> pending;
    const std::size_t end = std::min(start + width, shortlist.size());
    for (std::size_t i = start; i < end; ++i) {
      pending.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, one,
                                   std::cref(shortlist[i])));
    }
    for (std::size_t i = start; i < end; ++i) {
      try {
        summaries[i] = pending[i - start].get();
      } catch (const Error& e) {
        if (!options.skip_failures) throw;
        failures[i] = fmt::format("skipped {}: {}: {}", shortlist[i].id.canonical(), to_string(e.code()), e.what());
      }
    }
  }

  ContextBundle bundle;
  bundle.strategy = Strategy::kSummaries;
  std::vector<ContextBlock> blocks;
  std::vector<std::string> causes;
  for (std::size_t i = 0; i < shortlist.size(); ++i) {
    if (!summaries[i]) {
      spdlog::warn("{}", failures[i]);
      bundle.warnings.push_back(failures[i]);
      causes.push_back(failures[i]);
      continue;
    }
    const auto& p = shortlist[i];
    blocks.push_back(text_block(p, fmt::format("Title: {}\n{}\nSummary:\n{}", p.title, id_line(p), *summaries[i])));
  }
  if (blocks.empty()) throw Error(ErrorCode::kContextEmpty, "no paper could be summarized", causes);
  append_within_budget(bundle, std::move(blocks), options.budget);
  if (bundle.empty()) throw Error(ErrorCode::kContextEmpty, "no summary fits the context budget", bundle.warnings);
  return bundle;
}

void to_json(json& j, const ContextBundle& b) {
  json blocks = json::array();
  for (const auto& block : b.blocks) {
    json entry = {{"arxiv_id", block.id.canonical()}, {"heading", block.heading},
                  {"token_estimate", block.token_estimate}};
    if (block.is_pdf()) {
      entry["pdf_base64"] = base64_encode(block.bytes);
    } else {
      entry["body"] = block.body;
    }
    blocks.push_back(std::move(entry));
  }
  j = {{"strategy", to_string(b.strategy)}, {"blocks", blocks}, {"token_estimate", b.token_estimate},
       {"warnings", b.warnings}};
}

}  // namespace consult::context
