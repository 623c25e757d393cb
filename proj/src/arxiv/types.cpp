#include "consult/arxiv/types.hpp"

#include <regex>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"

namespace consult::arxiv {

std::optional<ArxivId> ArxivId::parse(std::string_view text) {
  std::string s(trim(text));
  for (const std::string_view prefix :
       {"https://arxiv.org/abs/", "http://arxiv.org/abs/", "https://arxiv.org/pdf/",
        "http://arxiv.org/pdf/", "https://export.arxiv.org/abs/", "http://export.arxiv.org/abs/",
        "arxiv:"}) {
    if (starts_with_icase(s, prefix)) {
      s = s.substr(prefix.size());
      break;
    }
  }
  if (ends_with_icase(s, ".pdf")) s.resize(s.size() - 4);

  static const std::regex grammar(
      R"(^(\d{4}\.\d{4,5}|[a-z]+(?:-[a-z]+)*(?:\.[A-Z]{2})?/\d{7})(?:v(\d+))?$)");
  std::smatch m;
  if (!std::regex_match(s, m, grammar)) return std::nullopt;
  ArxivId id;
  id.base_ = m[1].str();
  if (m[2].matched) id.version_ = std::stoi(m[2].str());
  return id;
}

ArxivId ArxivId::parse_or_throw(std::string_view text) {
  auto id = parse(text);
  if (!id) throw Error(ErrorCode::kInvalidArgument, "not a canonical arXiv id: " + std::string(text));
  return *id;
}

std::string ArxivId::canonical() const {
  return version_ ? base_ + "v" + std::to_string(*version_) : base_;
}

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kLatexConcat: return "latex_concat";
    case SourceKind::kMarkdown: return "markdown";
    case SourceKind::kPdfBytes: return "pdf_bytes";
  }
  return "latex_concat";
}

void to_json(nlohmann::json& j, const PaperMetadata& p) {
  j = {{"arxiv_id", p.id.canonical()}, {"title", p.title},     {"abstract", p.abstract},
       {"url", p.url},                 {"authors", p.authors}, {"published", p.published}};
}

PaperMetadata paper_from_json(const nlohmann::json& j) {
  PaperMetadata p;
  p.id = ArxivId::parse_or_throw(j.at("arxiv_id").get<std::string>());
  p.title = j.value("title", "");
  p.abstract = j.value("abstract", "");
  p.url = j.value("url", p.id.abs_url());
  p.authors = j.value("authors", std::vector<std::string>{});
  p.published = j.value("published", "");
  return p;
}

}  // namespace consult::arxiv
