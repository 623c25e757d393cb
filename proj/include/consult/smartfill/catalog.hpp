#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "consult/llm/gateway.hpp"

namespace consult::smartfill {

enum class ColumnKind { kNumerical, kCategorical, kText, kBinaryUri };
std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view s);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kText;
  bool operator==(const Column&) const = default;
};

struct DatasetCatalogEntry {
  std::string name;
  std::string description;
  std::vector<Column> columns;
  std::uint64_t row_count = 0;
  std::string location_uri;
  bool operator==(const DatasetCatalogEntry&) const = default;
};

inline constexpr int kCatalogVersion = 1;

// JSON-lines: first line {"catalog_version": 1}, then one entry per line:
//   {"name", "description", "columns": [{"name", "kind"}], "row_count", "location_uri"}
std::vector<DatasetCatalogEntry> load_catalog(std::string_view text);
std::string serialize_catalog(const std::vector<DatasetCatalogEntry>& catalog);

struct RankedDataset {
  DatasetCatalogEntry entry;
  double score = 0.0;
};

// Jaccard overlap between the description's word tokens and the entry's
// name + description + column-name tokens. Ties break by name.
double lexical_score(std::string_view description, const DatasetCatalogEntry& entry);

// Top-m entries by descending score. With a gateway, the lexical top-m is
// re-ranked by one structured call and scores become rank-based ((m-i)/m).
std::vector<RankedDataset> discover_datasets(std::string_view project_description,
                                             const std::vector<DatasetCatalogEntry>& catalog,
                                             int top_m, llm::Gateway* reranker = nullptr);

}  // namespace consult::smartfill
