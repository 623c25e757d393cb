#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace consult::arxiv {

// Canonical grammar:
//   new style  NNNN.NNNN or NNNN.NNNNN      e.g. 2101.01234
//   old style  archive[.XX]/NNNNNNN         e.g. hep-th/9901001, math.GT/0309136
// each optionally followed by vN.
class ArxivId {
 public:
  // Accepts bare ids plus "arXiv:" prefixes and arxiv.org abs/pdf URLs.
  static std::optional<ArxivId> parse(std::string_view text);
  static ArxivId parse_or_throw(std::string_view text);

  const std::string& base() const { return base_; }
  std::optional<int> version() const { return version_; }
  std::string canonical() const;
  std::string abs_url() const { return "https://arxiv.org/abs/" + canonical(); }

  bool operator==(const ArxivId&) const = default;

 private:
  std::string base_;
  std::optional<int> version_;
};

struct PaperMetadata {
  ArxivId id;
  std::string title;
  std::string abstract;
  std::string url;
  std::vector<std::string> authors;
  std::string published;  // ISO date as given by the feed

  bool operator==(const PaperMetadata&) const = default;
};

enum class SourceKind { kLatexConcat, kMarkdown, kPdfBytes };
std::string_view to_string(SourceKind kind);

struct SourceBundle {
  ArxivId id;
  SourceKind kind = SourceKind::kLatexConcat;
  std::string text;   // latex_concat / markdown
  std::string bytes;  // pdf_bytes
  std::vector<std::string> manifest;

  bool empty() const { return kind == SourceKind::kPdfBytes ? bytes.empty() : text.empty(); }
};

void to_json(nlohmann::json& j, const PaperMetadata& p);
PaperMetadata paper_from_json(const nlohmann::json& j);

}  // namespace consult::arxiv
