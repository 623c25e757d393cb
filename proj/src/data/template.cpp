#include "consult/data/template.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <variant>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"
#include "consult/common/text.hpp"

namespace consult::data {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Reject {
  std::string code;
  std::string message;
};

bool is_storage_uri(const std::string& s) {
  static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.\-]*://.+)");
  return std::regex_match(s, re);
}

std::optional<Reject> read_string(const json& obj, const char* key, std::optional<std::string>& out,
                                  bool uri = false) {
  if (!obj.contains(key)) return std::nullopt;
  const auto& v = obj[key];
  if (!v.is_string()) return Reject{"invalid_field_type", fmt::format("{} must be a string", key)};
  if (uri && !is_storage_uri(v.get<std::string>())) {
    return Reject{"invalid_uri", fmt::format("{} must be a storage URI such as s3://bucket/key", key)};
  }
  out = v.get<std::string>();
  return std::nullopt;
}

std::optional<Reject> parse_input(const json& j, DataInput& in) {
  if (!j.is_object()) return Reject{"invalid_input", "input must be an object"};
  static const std::set<std::string> allowed = {"text",   "image_url",          "audio_url",           "video_url",
                                                "base64", "numerical_features", "categorical_features"};
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) return Reject{"unknown_input_key", fmt::format("input key '{}' is not allowed", key)};
  }
  if (auto r = read_string(j, "text", in.text)) return r;
  if (auto r = read_string(j, "image_url", in.image_url, true)) return r;
  if (auto r = read_string(j, "audio_url", in.audio_url, true)) return r;
  if (auto r = read_string(j, "video_url", in.video_url, true)) return r;
  if (auto r = read_string(j, "base64", in.base64)) return r;
  if (j.contains("numerical_features")) {
    const auto& m = j["numerical_features"];
    if (!m.is_object()) return Reject{"invalid_field_type", "numerical_features must be an object"};
    std::map<std::string, double> features;
    for (const auto& [key, value] : m.items()) {
      if (!value.is_number()) {
        return Reject{"invalid_field_type", fmt::format("numerical feature '{}' must be a number", key)};
      }
      const double d = value.get<double>();
      if (!std::isfinite(d)) return Reject{"non_finite_number", fmt::format("numerical feature '{}' is not finite", key)};
      features.emplace(key, d);
    }
    in.numerical_features = std::move(features);
  }
  if (j.contains("categorical_features")) {
    const auto& m = j["categorical_features"];
    if (!m.is_object()) return Reject{"invalid_field_type", "categorical_features must be an object"};
    std::map<std::string, std::string> features;
    for (const auto& [key, value] : m.items()) {
      if (!value.is_string()) {
        return Reject{"invalid_field_type", fmt::format("categorical feature '{}' must be a string", key)};
      }
      features.emplace(key, value.get<std::string>());
    }
    in.categorical_features = std::move(features);
  }
  return std::nullopt;
}

std::optional<Reject> parse_output(const json& j, DataOutput& out) {
  if (!j.is_object()) return Reject{"invalid_output", "output must be an object"};
  static const std::set<std::string> allowed = {"text", "numerical", "categorical", "character_spans"};
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) return Reject{"unknown_output_key", fmt::format("output key '{}' is not allowed", key)};
  }
  if (auto r = read_string(j, "text", out.text)) return r;
  if (auto r = read_string(j, "categorical", out.categorical)) return r;
  if (j.contains("numerical")) {
    const auto& v = j["numerical"];
    if (!v.is_number()) return Reject{"invalid_field_type", "output numerical must be a number"};
    if (!std::isfinite(v.get<double>())) return Reject{"non_finite_number", "output numerical is not finite"};
    out.numerical = v.get<double>();
  }
  if (j.contains("character_spans")) {
    const auto& s = j["character_spans"];
    if (!s.is_object() || s.size() != 2 || !s.contains("start_char") || !s.contains("end_char") ||
        !s["start_char"].is_number_integer() || !s["end_char"].is_number_integer()) {
      return Reject{"invalid_span", "character_spans must be {start_char, end_char} integers"};
    }
    CharSpan span{s["start_char"].get<std::int64_t>(), s["end_char"].get<std::int64_t>()};
    if (span.start_char < 0 || span.start_char > span.end_char) {
      return Reject{"invalid_span",
                    fmt::format("need 0 <= start_char <= end_char, got {} and {}", span.start_char, span.end_char)};
    }
    out.character_spans = span;
  }
  return std::nullopt;
}

std::variant<DataRecord, Reject> parse_record(std::string_view line, std::optional<std::string>& id_out) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    return Reject{"invalid_json", e.what()};
  } catch (const json::out_of_range& e) {
    // 406: a numeric literal that overflows a double.
    if (e.id == 406) return Reject{"non_finite_number", e.what()};
    return Reject{"invalid_json", e.what()};
  }
  if (!j.is_object()) return Reject{"not_an_object", "each line must be a JSON object"};
  if (j.contains("unique_id") && j["unique_id"].is_string()) id_out = j["unique_id"].get<std::string>();
  for (const auto& [key, value] : j.items()) {
    if (key != "unique_id" && key != "input" && key != "output") {
      return Reject{"unknown_top_level_key",
                    fmt::format("top-level key '{}' is not allowed; only unique_id, input and output", key)};
    }
  }
  if (!j.contains("unique_id")) return Reject{"missing_unique_id", "unique_id is required"};
  if (!j["unique_id"].is_string() || j["unique_id"].get<std::string>().empty()) {
    return Reject{"invalid_unique_id", "unique_id must be a non-empty string"};
  }
  DataRecord record;
  record.unique_id = j["unique_id"].get<std::string>();
  if (j.contains("input")) {
    DataInput in;
    if (auto r = parse_input(j["input"], in)) return *r;
    record.input = std::move(in);
  }
  if (j.contains("output")) {
    DataOutput out;
    if (auto r = parse_output(j["output"], out)) return *r;
    record.output = std::move(out);
  }
  return record;
}

// Reads one line without ever holding more than `limit` bytes of it.
// Returns false at end of input; `too_long` reports a truncated line.
bool read_line(std::istream& in, std::string& line, std::size_t limit, bool& too_long) {
  line.clear();
  too_long = false;
  auto* buf = in.rdbuf();
  bool any = false;
  for (;;) {
    const int c = buf->sbumpc();
    if (c == std::char_traits<char>::eof()) return any;
    any = true;
    if (c == '\n') return true;
    if (line.size() >= limit) {
      too_long = true;
      continue;
    }
    line.push_back(static_cast<char>(c));
  }
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

}  // namespace

std::string_view to_string(SplitRole role) {
  switch (role) {
    case SplitRole::kTrain: return "train";
    case SplitRole::kValidation: return "validation";
    case SplitRole::kTest: return "test";
  }
  return "train";
}

SplitRole split_role_from_string(std::string_view s) {
  for (auto r : {SplitRole::kTrain, SplitRole::kValidation, SplitRole::kTest}) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown split role '{}'", s));
}

ParseResult parse_jsonl(std::istream& in, SplitRole role, std::string source_uri, std::size_t max_line_bytes) {
  if (!in) throw Error(ErrorCode::kIoError, "cannot read data stream " + source_uri);
  ParseResult result;
  result.split.role = role;
  result.split.source_uri = std::move(source_uri);
  std::set<std::string> seen;
  std::string line;
  bool too_long = false;
  while (read_line(in, line, max_line_bytes, too_long)) {
    const std::size_t number = ++result.total_lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (too_long) {
      result.violations.push_back({number, std::nullopt, "line_too_long",
                                   fmt::format("line exceeds {} bytes", max_line_bytes)});
      continue;
    }
    if (is_blank(line)) {
      ++result.blank_lines;
      continue;
    }
    std::optional<std::string> id;
    auto parsed = parse_record(line, id);
    if (auto* reject = std::get_if<Reject>(&parsed)) {
      result.violations.push_back({number, id, reject->code, reject->message});
      continue;
    }
    auto& record = std::get<DataRecord>(parsed);
    if (!seen.insert(record.unique_id).second) {
      result.violations.push_back({number, record.unique_id, "duplicate_unique_id",
                                   fmt::format("unique_id '{}' already used earlier in this split", record.unique_id)});
      continue;
    }
    result.split.records.push_back(std::move(record));
  }
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failure in " + result.split.source_uri);
  return result;
}

ParseResult parse_jsonl_text(std::string_view text, SplitRole role, std::size_t max_line_bytes) {
  std::istringstream in{std::string(text)};
  return parse_jsonl(in, role, {}, max_line_bytes);
}

ParseResult parse_jsonl_uri(std::string_view uri, SplitRole role) {
  const auto path = resolve_uri(uri);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open {}", path.string()));
  return parse_jsonl(in, role, std::string(uri));
}

std::string serialize_record(const DataRecord& r) {
  ordered_json j;
  j["unique_id"] = r.unique_id;
  if (r.input) {
    ordered_json in = ordered_json::object();
    const auto& i = *r.input;
    if (i.text) in["text"] = *i.text;
    if (i.image_url) in["image_url"] = *i.image_url;
    if (i.audio_url) in["audio_url"] = *i.audio_url;
    if (i.video_url) in["video_url"] = *i.video_url;
    if (i.base64) in["base64"] = *i.base64;
    if (i.numerical_features) {
      ordered_json m = ordered_json::object();
      for (const auto& [k, v] : *i.numerical_features) m[k] = v;
      in["numerical_features"] = m;
    }
    if (i.categorical_features) {
      ordered_json m = ordered_json::object();
      for (const auto& [k, v] : *i.categorical_features) m[k] = v;
      in["categorical_features"] = m;
    }
    j["input"] = in;
  }
  if (r.output) {
    ordered_json out = ordered_json::object();
    const auto& o = *r.output;
    if (o.text) out["text"] = *o.text;
    if (o.numerical) out["numerical"] = *o.numerical;
    if (o.categorical) out["categorical"] = *o.categorical;
    if (o.character_spans) {
      out["character_spans"] = {{"start_char", o.character_spans->start_char},
                                 {"end_char", o.character_spans->end_char}};
    }
    j["output"] = out;
  }
  return j.dump();
}

std::string serialize_split(const DatasetSplit& split) {
  std::string out;
  for (const auto& r : split.records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kRegression: return "regression";
    case TaskKind::kBinaryClassification: return "binary_classification";
    case TaskKind::kMulticlassClassification: return "multiclass_classification";
    case TaskKind::kTextGeneration: return "text_generation";
  }
  return "regression";
}

TaskKind task_kind_from_string(std::string_view s) {
  for (auto k : {TaskKind::kRegression, TaskKind::kBinaryClassification, TaskKind::kMulticlassClassification,
                 TaskKind::kTextGeneration}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown task kind '{}'", s),
              {"regression", "binary_classification", "multiclass_classification", "text_generation"});
}

bool is_tabular(TaskKind kind) { return kind != TaskKind::kTextGeneration; }

ValidationReport validate_for_task(const DatasetSplit& split, TaskKind task) {
  ValidationReport report;
  if (split.records.empty()) {
    report.add("empty_split", "", fmt::format("{} split has no records", to_string(split.role)));
    return report;
  }

  if (task == TaskKind::kTextGeneration) {
    const bool needs_target = split.role != SplitRole::kTest;
    for (const auto& r : split.records) {
      if (!r.input || !r.input->text) report.add("missing_input_text", r.unique_id, "input.text is required");
      if (needs_target && (!r.output || !r.output->text)) {
        report.add("missing_output_text", r.unique_id,
                   fmt::format("output.text is required in the {} split", to_string(split.role)));
      }
    }
    return report;
  }

  // Reference = union over records, so the outcome does not depend on order.
  std::map<std::string, std::set<std::string>> kinds;  // feature -> {"numerical", "categorical"}
  for (const auto& r : split.records) {
    if (!r.input) continue;
    if (r.input->numerical_features) {
      for (const auto& [k, v] : *r.input->numerical_features) kinds[k].insert("numerical");
    }
    if (r.input->categorical_features) {
      for (const auto& [k, v] : *r.input->categorical_features) kinds[k].insert("categorical");
    }
  }
  if (kinds.empty()) report.add("missing_features", "", "no record carries numerical or categorical features");

  std::set<std::string> labels;
  for (const auto& r : split.records) {
    std::set<std::string> mine;
    std::set<std::string> mixed;
    if (r.input && r.input->numerical_features) {
      for (const auto& [k, v] : *r.input->numerical_features) mine.insert(k);
    }
    if (r.input && r.input->categorical_features) {
      for (const auto& [k, v] : *r.input->categorical_features) {
        if (!mine.insert(k).second) mixed.insert(k);
      }
    }
    std::vector<std::string> missing;
    for (const auto& [k, ks] : kinds) {
      if (!mine.count(k)) missing.push_back(k);
      if (mine.count(k) && ks.size() > 1) mixed.insert(k);
    }
    if (!missing.empty()) {
      report.add("inconsistent_feature_set", r.unique_id,
                 fmt::format("record {} lacks feature(s) {}", r.unique_id, fmt::join(missing, ", ")));
    }
    for (const auto& k : mixed) {
      report.add("inconsistent_feature_kind", r.unique_id,
                 fmt::format("feature '{}' is both numerical and categorical across records", k));
    }
    if (task == TaskKind::kRegression) {
      if (!r.output || !r.output->numerical) {
        report.add("missing_output_numerical", r.unique_id, "output.numerical is required for regression");
      }
    } else if (!r.output || !r.output->categorical) {
      report.add("missing_output_categorical", r.unique_id, "output.categorical is required for classification");
    } else {
      labels.insert(*r.output->categorical);
    }
  }

  if (split.role == SplitRole::kTrain) {
    if (task == TaskKind::kBinaryClassification && labels.size() != 2) {
      report.add("label_cardinality", "",
                 fmt::format("binary classification needs exactly 2 labels in train, found {}", labels.size()));
    } else if (task == TaskKind::kMulticlassClassification && labels.size() < 2) {
      report.add("label_cardinality", "",
                 fmt::format("multiclass classification needs at least 2 labels in train, found {}", labels.size()));
    }
  }
  return report;
}

std::string split_file_name(SplitRole role) { return fmt::format("{}.jsonl", to_string(role)); }

SplitDirectory load_split_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kNotFound, fmt::format("split directory {} does not exist", dir.string()));
  }
  SplitDirectory out;
  for (auto role : {SplitRole::kTrain, SplitRole::kValidation, SplitRole::kTest}) {
    const auto path = dir / split_file_name(role);
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    out.splits.emplace(role, parse_jsonl(in, role, file_uri(path)));
  }
  return out;
}

void to_json(json& j, const TemplateViolation& v) {
  j = {{"line_number", v.line_number}, {"code", v.code}, {"message", v.message}};
  j["record_id"] = v.record_id ? json(*v.record_id) : json(nullptr);
}

}  // namespace consult::data
