#include "consult/smartfill/catalog.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"
#include "consult/llm/json_schema.hpp"

namespace consult::smartfill {

using nlohmann::json;

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kNumerical: return "numerical";
    case ColumnKind::kCategorical: return "categorical";
    case ColumnKind::kText: return "text";
    case ColumnKind::kBinaryUri: return "binary_uri";
  }
  return "text";
}

ColumnKind column_kind_from_string(std::string_view s) {
  if (s == "numerical") return ColumnKind::kNumerical;
  if (s == "categorical") return ColumnKind::kCategorical;
  if (s == "text") return ColumnKind::kText;
  if (s == "binary_uri") return ColumnKind::kBinaryUri;
  throw Error(ErrorCode::kParseError, fmt::format("unknown column kind '{}'", s));
}

std::vector<DatasetCatalogEntry> load_catalog(std::string_view text) {
  std::vector<DatasetCatalogEntry> catalog;
  std::set<std::string> names;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto where = fmt::format("catalog line {}", line_no);
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kParseError, where + ": not a JSON object");
    if (!saw_header) {
      if (!j.contains("catalog_version") || j["catalog_version"] != kCatalogVersion) {
        throw Error(ErrorCode::kParseError, where + ": expected header {\"catalog_version\": 1}");
      }
      saw_header = true;
      continue;
    }
    try {
      DatasetCatalogEntry e;
      e.name = j.at("name").get<std::string>();
      e.description = j.value("description", "");
      for (const auto& c : j.value("columns", json::array())) {
        e.columns.push_back({c.at("name").get<std::string>(),
                             column_kind_from_string(c.at("kind").get<std::string>())});
      }
      const auto rows = j.value("row_count", json(0));
      if (!rows.is_number_integer() || rows.get<std::int64_t>() < 0) {
        throw Error(ErrorCode::kParseError, where + ": row_count must be a nonnegative integer");
      }
      e.row_count = rows.get<std::uint64_t>();
      e.location_uri = j.value("location_uri", "");
      if (e.name.empty()) throw Error(ErrorCode::kParseError, where + ": empty dataset name");
      if (!names.insert(e.name).second) {
        throw Error(ErrorCode::kParseError, fmt::format("{}: duplicate dataset name '{}'", where, e.name));
      }
      catalog.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kParseError, fmt::format("{}: {}", where, ex.what()));
    }
  }
  if (!saw_header && !catalog.empty()) throw Error(ErrorCode::kParseError, "catalog header missing");
  return catalog;
}

std::string serialize_catalog(const std::vector<DatasetCatalogEntry>& catalog) {
  std::string out = json{{"catalog_version", kCatalogVersion}}.dump() + "\n";
  for (const auto& e : catalog) {
    json cols = json::array();
    for (const auto& c : e.columns) cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
    json line = {{"name", e.name},           {"description", e.description}, {"columns", cols},
                 {"row_count", e.row_count}, {"location_uri", e.location_uri}};
    out += line.dump() + "\n";
  }
  return out;
}

double lexical_score(std::string_view description, const DatasetCatalogEntry& entry) {
  const auto query_tokens = word_tokens(description);
  const std::set<std::string> query(query_tokens.begin(), query_tokens.end());
  std::set<std::string> doc;
  for (auto& t : word_tokens(entry.name)) doc.insert(std::move(t));
  for (auto& t : word_tokens(entry.description)) doc.insert(std::move(t));
  for (const auto& c : entry.columns) {
    for (auto& t : word_tokens(c.name)) doc.insert(std::move(t));
  }
  std::size_t shared = 0;
  for (const auto& t : query) shared += doc.count(t);
  const auto uni = query.size() + doc.size() - shared;
  return uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni);
}

std::vector<RankedDataset> discover_datasets(std::string_view project_description,
                                             const std::vector<DatasetCatalogEntry>& catalog,
                                             int top_m, llm::Gateway* reranker) {
  if (top_m < 1) throw Error(ErrorCode::kInvalidArgument, "top_m must be >= 1");
  std::vector<RankedDataset> ranked;
  ranked.reserve(catalog.size());
  for (const auto& e : catalog) ranked.push_back({e, lexical_score(project_description, e)});
  std::sort(ranked.begin(), ranked.end(), [](const RankedDataset& a, const RankedDataset& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entry.name < b.entry.name;
  });
  if (ranked.size() > static_cast<std::size_t>(top_m)) ranked.resize(static_cast<std::size_t>(top_m));
  if (reranker == nullptr || ranked.size() < 2) return ranked;

  std::string listing;
  for (const auto& r : ranked) {
    listing += fmt::format("- {}: {}\n", r.entry.name, r.entry.description);
  }
  llm::ChatRequest request;
  request.system_text = "You match project descriptions to internal datasets.";
  request.user_text = fmt::format(
      "Project description:\n{}\n\nRank these datasets from most to least relevant. "
      "Return every name exactly once.\n{}",
      project_description, listing);
  request.output_schema = llm::string_list_schema("ranking");
  const auto reply = reranker->complete_structured(request);

  std::vector<RankedDataset> reordered;
  std::set<std::string> placed;
  for (const auto& name : reply["ranking"]) {
    const auto n = name.get<std::string>();
    const auto it = std::find_if(ranked.begin(), ranked.end(),
                                 [&](const RankedDataset& r) { return r.entry.name == n; });
    if (it != ranked.end() && placed.insert(n).second) reordered.push_back(*it);
  }
  for (const auto& r : ranked) {
    if (!placed.count(r.entry.name)) reordered.push_back(r);
  }
  const auto m = static_cast<double>(reordered.size());
  for (std::size_t i = 0; i < reordered.size(); ++i) {
    reordered[i].score = (m - static_cast<double>(i)) / m;
  }
  return reordered;
}

}  // namespace consult::smartfill
