#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/common/report.hpp"

namespace consult::data {

struct CharSpan {
  std::int64_t start_char = 0;
  std::int64_t end_char = 0;
  bool operator==(const CharSpan&) const = default;
};

struct DataInput {
  std::optional<std::string> text;
  std::optional<std::string> image_url;
  std::optional<std::string> audio_url;
  std::optional<std::string> video_url;
  std::optional<std::string> base64;
  std::optional<std::map<std::string, double>> numerical_features;
  std::optional<std::map<std::string, std::string>> categorical_features;
  bool operator==(const DataInput&) const = default;
};

struct DataOutput {
  std::optional<std::string> text;
  std::optional<double> numerical;
  std::optional<std::string> categorical;
  std::optional<CharSpan> character_spans;
  bool operator==(const DataOutput&) const = default;
};

struct DataRecord {
  std::string unique_id;
  std::optional<DataInput> input;
  std::optional<DataOutput> output;
  bool operator==(const DataRecord&) const = default;
};

enum class SplitRole { kTrain, kValidation, kTest };
std::string_view to_string(SplitRole role);
SplitRole split_role_from_string(std::string_view s);

struct DatasetSplit {
  SplitRole role = SplitRole::kTrain;
  std::vector<DataRecord> records;
  std::string source_uri;
  bool operator==(const DatasetSplit&) const = default;
};

struct TemplateViolation {
  std::size_t line_number = 1;
  std::optional<std::string> record_id;
  std::string code;
  std::string message;
};

struct ParseResult {
  DatasetSplit split;
  std::vector<TemplateViolation> violations;  // at most one per line
  std::size_t total_lines = 0;
  std::size_t blank_lines = 0;
};

inline constexpr std::size_t kMaxLineBytes = 10 * 1024 * 1024;

// Each line is checked on its own; bad lines become violations and are
// skipped. Throws only when the stream itself fails.
ParseResult parse_jsonl(std::istream& in, SplitRole role, std::string source_uri = {},
                        std::size_t max_line_bytes = kMaxLineBytes);
ParseResult parse_jsonl_text(std::string_view text, SplitRole role, std::size_t max_line_bytes = kMaxLineBytes);
ParseResult parse_jsonl_uri(std::string_view uri, SplitRole role);

// Key order: unique_id, input{text, image_url, audio_url, video_url, base64,
// numerical_features, categorical_features}, output{text, numerical,
// categorical, character_spans{start_char, end_char}}; feature keys sorted.
std::string serialize_record(const DataRecord& record);
std::string serialize_split(const DatasetSplit& split);

enum class TaskKind { kRegression, kBinaryClassification, kMulticlassClassification, kTextGeneration };
std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view s);
bool is_tabular(TaskKind kind);

// Findings use the record id as subject; split-wide findings use "".
ValidationReport validate_for_task(const DatasetSplit& split, TaskKind task);

// train.jsonl, validation.jsonl and test.jsonl under one directory.
struct SplitDirectory {
  std::map<SplitRole, ParseResult> splits;  // only files that exist
};
SplitDirectory load_split_directory(const std::filesystem::path& dir);
std::string split_file_name(SplitRole role);

void to_json(nlohmann::json& j, const TemplateViolation& v);

}  // namespace consult::data
