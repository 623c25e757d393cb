#include "consult/recommend/recommendation.hpp"

#include <array>
#include <optional>
#include <regex>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"
#include "consult/common/text.hpp"

namespace consult::recommend {

namespace detail {
extern const std::string_view kPromptTemplate;
}

using nlohmann::json;

namespace {

constexpr std::string_view kQaSlot = "{formatted_qa}";
constexpr std::string_view kContextSlot = "{summaries_str}";
constexpr std::string_view kThinkOpen = "<small><em>";
constexpr std::string_view kThinkClose = "</em></small>";

std::string_view strategy_note(context::Strategy s) {
  switch (s) {
    case context::Strategy::kAbstractOnly: return "titles, links and abstracts of the shortlisted papers";
    case context::Strategy::kFullPaperPdf: return "one full paper, attached as a PDF";
    case context::Strategy::kFullPaperText: return "full text of one or two papers";
    case context::Strategy::kSummaries: return "task-specific summaries of the shortlisted papers";
  }
  return "";
}

void replace_once(std::string& text, std::string_view slot, std::string_view value) {
  const auto pos = text.find(slot);
  if (pos == std::string::npos) throw Error(ErrorCode::kPrecondition, fmt::format("template lacks slot {}", slot));
  text.replace(pos, slot.size(), value);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = nl + 1;
  }
  return out;
}

bool is_fence(std::string_view line) {
  const auto t = trim(line);
  return t.starts_with("```") || t.starts_with("~~~");
}

std::optional<int> heading_kind(std::string_view line) {
  auto t = to_lower(collapse_whitespace(line));
  if (!t.empty() && t.back() == ':') t.pop_back();
  if (t == to_lower(kBestSolutionHeading)) return 0;
  if (t == to_lower(kStrongBaselineHeading)) return 1;
  return std::nullopt;
}

const std::regex& label_pattern() {
  static const std::regex re(
      R"(^\s*\*\*\s*(description|step[- ]by[- ]step solution|coding details|justification|references)\s*:?\s*\*\*\s*:?\s*(.*)$)",
      std::regex::icase);
  return re;
}

std::string* field_for(RecSection& s, std::string label) {
  label = to_lower(label);
  if (label == "description") return &s.description;
  if (label.starts_with("step")) return &s.step_by_step;
  if (label == "coding details") return &s.coding_details;
  if (label == "justification") return &s.justification;
  return &s.references;
}

std::string trim_block(const std::string& s) { return std::string(trim(s)); }

RecSection parse_section(const std::vector<std::string_view>& lines) {
  RecSection section;
  std::string preamble;
  std::string* current = &preamble;
  bool in_fence = false;
  std::string pending;
  auto flush = [&](std::string* target) {
    if (target == nullptr) return;
    if (!target->empty() && !pending.empty()) *target += "\n\n";
    *target += trim_block(pending);
    pending.clear();
  };
  for (const auto line : lines) {
    std::smatch m;
    const std::string owned(line);
    if (!in_fence && std::regex_match(owned, m, label_pattern())) {
      flush(current);
      current = field_for(section, m[1].str());
      pending = m[2].str();
      if (!pending.empty()) pending += "\n";
      continue;
    }
    if (is_fence(line)) in_fence = !in_fence;
    pending += owned;
    pending += "\n";
  }
  flush(current);
  const auto pre = trim_block(preamble);
  if (!pre.empty()) {
    section.description = section.description.empty() ? pre : pre + "\n\n" + section.description;
  }
  return section;
}

void render_section(std::string& out, const RecSection& s) {
  const std::array<std::pair<std::string_view, const std::string*>, 5> parts = {{
      {"Description", &s.description},
      {"Step-by-Step Solution", &s.step_by_step},
      {"Coding Details", &s.coding_details},
      {"Justification", &s.justification},
      {"References", &s.references},
  }};
  for (const auto& [label, text] : parts) {
    out += fmt::format("**{}**\n", label);
    if (!text->empty()) out += *text + "\n";
    out += "\n";
  }
}

struct Citation {
  std::string text;
  std::string surname;
  std::string year;
};

std::vector<Citation> find_citations(const std::string& text) {
  static const std::regex group(R"(\(([^()]+)\))");
  static const std::regex single(R"(^\s*(.+?),\s*((?:1[89]|20)\d{2}[a-z]?|Year|n\.d\.)\s*$)");
  std::vector<Citation> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), group); it != std::sregex_iterator(); ++it) {
    std::string inner = (*it)[1].str();
    std::size_t start = 0;
    while (start <= inner.size()) {
      auto end = inner.find(';', start);
      if (end == std::string::npos) end = inner.size();
      const auto part = inner.substr(start, end - start);
      std::smatch m;
      if (std::regex_match(part, m, single)) {
        const auto authors = m[1].str();
        // First surname: the first word before "et al", "&" or "and".
        std::string first = std::string(trim(authors.substr(0, authors.find_first_of("&,"))));
        const auto et = first.find(" et al");
        if (et != std::string::npos) first = first.substr(0, et);
        const auto and_pos = first.find(" and ");
        if (and_pos != std::string::npos) first = first.substr(0, and_pos);
        if (!word_tokens(first).empty()) out.push_back({std::string(trim(part)), std::string(trim(first)), m[2].str()});
      }
      start = end + 1;
    }
  }
  return out;
}

bool is_placeholder(const Citation& c) {
  static const std::regex generic(R"(^(author\d*|name\d*|surname\d*|firstauthor|lastname)$)", std::regex::icase);
  return c.year == "Year" || std::regex_match(c.surname, generic);
}

bool referenced(const Citation& c, const std::string& references) {
  const auto surname = to_lower(c.surname);
  for (const auto line : split_lines(references)) {
    const auto lower = to_lower(line);
    if (lower.find(surname) != std::string::npos && lower.find(to_lower(c.year)) != std::string::npos) return true;
  }
  return false;
}

void lint_section(std::vector<Finding>& out, const RecSection& s, std::string_view name) {
  const std::array<std::pair<std::string_view, const std::string*>, 5> parts = {{
      {"description", &s.description},
      {"step_by_step", &s.step_by_step},
      {"coding_details", &s.coding_details},
      {"justification", &s.justification},
      {"references", &s.references},
  }};
  for (const auto& [field, text] : parts) {
    const auto subject = fmt::format("{}.{}", name, field);
    for (const auto& c : find_citations(*text)) {
      if (is_placeholder(c)) {
        out.push_back({"placeholder_citation", subject, fmt::format("placeholder citation ({})", c.text), {}});
      } else if (field == "justification" && !referenced(c, s.references)) {
        out.push_back({"unmatched_citation", subject,
                       fmt::format("citation ({}) has no matching entry in references", c.text), {}});
      }
    }
  }
}

}  // namespace

std::string_view prompt_template() { return detail::kPromptTemplate; }

std::string render_context(const context::ContextBundle& bundle) {
  std::string out = fmt::format("### Context strategy: {} ({})\n", context::to_string(bundle.strategy),
                                strategy_note(bundle.strategy));
  for (const auto& block : bundle.blocks) {
    out += fmt::format("\n#### {}\n", block.heading);
    if (block.is_pdf()) {
      out += fmt::format("arXiv ID: {} ({})\nThe full paper is attached as a PDF.\n", block.id.canonical(),
                         block.id.abs_url());
    } else {
      out += block.body + "\n";
    }
  }
  return out;
}

std::string render_prompt(std::string_view formatted_qa, const context::ContextBundle& bundle) {
  if (bundle.empty()) throw Error(ErrorCode::kPrecondition, "context bundle is empty");
  std::string text(prompt_template());
  const auto qa = trim(formatted_qa);
  // Substitute the context first so questionnaire text cannot inject a slot.
  replace_once(text, kContextSlot, render_context(bundle));
  replace_once(text, kQaSlot, qa.empty() ? kNoResponse : qa);
  return text;
}

std::string generate(std::string_view formatted_qa, const context::ContextBundle& bundle, llm::Gateway& gateway) {
  llm::ChatRequest request;
  request.user_text = render_prompt(formatted_qa, bundle);
  request.max_output_tokens = 8192;
  for (const auto& block : bundle.blocks) {
    if (block.is_pdf()) request.attachments.push_back({block.bytes, llm::MediaKind::kPdf});
  }
  return gateway.complete(request);
}

RecommendationDoc parse_recommendation(std::string_view raw) {
  RecommendationDoc doc;
  doc.raw_markdown = std::string(raw);
  std::string_view body = raw;
  const auto lead = body.find_first_not_of(" \t\r\n");
  if (lead != std::string_view::npos && starts_with_icase(body.substr(lead), kThinkOpen)) {
    const auto open_end = lead + kThinkOpen.size();
    const auto lower = to_lower(body);
    const auto close = lower.find(kThinkClose, open_end);
    if (close == std::string::npos) {
      throw Error(ErrorCode::kRecommendationParse, "thinking block is not closed", {std::string(kThinkClose)});
    }
    doc.thinking = std::string(trim(body.substr(open_end, close - open_end)));
    body = body.substr(close + kThinkClose.size());
  }

  const auto lines = split_lines(body);
  std::array<std::optional<std::size_t>, 2> at;
  const std::array<std::string_view, 2> names = {kBestSolutionHeading, kStrongBaselineHeading};
  bool in_fence = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_fence(lines[i])) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) continue;
    if (const auto kind = heading_kind(lines[i])) {
      if (at[*kind]) {
        throw Error(ErrorCode::kRecommendationParse, fmt::format("duplicated heading '{}'", names[*kind]),
                    {std::string(names[*kind])});
      }
      at[*kind] = i;
    }
  }
  for (int k = 0; k < 2; ++k) {
    if (!at[k]) {
      throw Error(ErrorCode::kRecommendationParse, fmt::format("missing heading '{}'", names[k]),
                  {std::string(names[k])});
    }
  }
  if (*at[1] < *at[0]) {
    throw Error(ErrorCode::kRecommendationParse,
                fmt::format("'{}' must come before '{}'", names[0], names[1]), {std::string(names[0])});
  }
  doc.best_solution = parse_section({lines.begin() + *at[0] + 1, lines.begin() + *at[1]});
  doc.strong_baseline = parse_section({lines.begin() + *at[1] + 1, lines.end()});
  return doc;
}

std::string render_recommendation(const RecommendationDoc& doc) {
  std::string out;
  if (!doc.thinking.empty()) out += fmt::format("{}{}{}\n\n", kThinkOpen, doc.thinking, kThinkClose);
  out += fmt::format("{}\n\n", kBestSolutionHeading);
  render_section(out, doc.best_solution);
  out += fmt::format("{}\n\n", kStrongBaselineHeading);
  render_section(out, doc.strong_baseline);
  return out;
}

std::vector<Finding> lint_citations(const RecommendationDoc& doc) {
  std::vector<Finding> out;
  lint_section(out, doc.best_solution, "best_solution");
  lint_section(out, doc.strong_baseline, "strong_baseline");
  return out;
}

void to_json(json& j, const RecSection& s) {
  j = {{"description", s.description},
       {"step_by_step", s.step_by_step},
       {"coding_details", s.coding_details},
       {"justification", s.justification},
       {"references", s.references}};
}

void to_json(json& j, const RecommendationDoc& d) {
  j = {{"thinking", d.thinking},
       {"sections", {{"best_solution", d.best_solution}, {"strong_baseline", d.strong_baseline}}},
       {"strategy", context::to_string(d.context_strategy)},
       {"evidence_ids", d.evidence_ids},
       {"raw_markdown", d.raw_markdown}};
}

namespace {
RecSection section_from_json(const json& j) {
  return {j.value("description", ""), j.value("step_by_step", ""), j.value("coding_details", ""),
          j.value("justification", ""), j.value("references", "")};
}
}  // namespace

RecommendationDoc recommendation_from_json(const json& j) {
  RecommendationDoc d;
  d.thinking = j.value("thinking", "");
  const auto& sections = j.at("sections");
  d.best_solution = section_from_json(sections.at("best_solution"));
  d.strong_baseline = section_from_json(sections.at("strong_baseline"));
  d.context_strategy = context::strategy_from_string(j.value("strategy", "abstract_only"));
  d.evidence_ids = j.value("evidence_ids", std::vector<std::string>{});
  d.raw_markdown = j.value("raw_markdown", "");
  return d;
}

void save_recommendation(const std::filesystem::path& dir, const RecommendationDoc& doc) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "recommendation.md", doc.raw_markdown);
  json sidecar = doc;
  sidecar.erase("raw_markdown");
  sidecar["created_at"] = utc_timestamp();
  write_file_atomic(dir / "recommendation.json", sidecar.dump(2) + "\n");
}

RecommendationDoc load_recommendation(const std::filesystem::path& dir) {
  const auto sidecar = dir / "recommendation.json";
  if (!std::filesystem::exists(sidecar)) {
    throw Error(ErrorCode::kNotFound, fmt::format("no recommendation at {}", dir.string()));
  }
  auto doc = recommendation_from_json(json::parse(read_file(sidecar)));
  doc.raw_markdown = read_file(dir / "recommendation.md");
  return doc;
}

}  // namespace consult::recommend
