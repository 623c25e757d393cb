#include "consult/llm/json_schema.hpp"

#include <cmath>

#include <fmt/format.h>

#include "consult/common/text.hpp"

namespace consult::llm {

using nlohmann::json;

namespace {

bool has_type(const json& value, std::string_view type) {
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "integer") {
    if (value.is_number_integer()) return true;
    if (!value.is_number_float()) return false;
    const double d = value.get<double>();
    return std::isfinite(d) && std::floor(d) == d;
  }
  if (type == "boolean") return value.is_boolean();
  if (type == "array") return value.is_array();
  if (type == "object") return value.is_object();
  if (type == "null") return value.is_null();
  return false;
}

std::optional<std::string> check(const json& schema, const json& value, const std::string& path) {
  if (!schema.is_object()) return std::nullopt;
  const auto fail = [&](std::string reason) {
    return std::optional<std::string>(fmt::format("{}: {}", path, reason));
  };

  if (schema.contains("type")) {
    const auto& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = has_type(value, t.get<std::string>());
    } else if (t.is_array()) {
      for (const auto& alt : t) ok = ok || has_type(value, alt.get<std::string>());
    }
    if (!ok) return fail(fmt::format("expected type {}", t.dump()));
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == value;
    if (!found) return fail("value not in enum");
  }
  if (value.is_number()) {
    if (schema.contains("minimum") && value.get<double>() < schema["minimum"].get<double>()) {
      return fail("below minimum");
    }
    if (schema.contains("maximum") && value.get<double>() > schema["maximum"].get<double>()) {
      return fail("above maximum");
    }
  }
  if (value.is_string() && schema.contains("minLength") &&
      value.get<std::string>().size() < schema["minLength"].get<std::size_t>()) {
    return fail("string too short");
  }
  if (value.is_array()) {
    if (schema.contains("minItems") && value.size() < schema["minItems"].get<std::size_t>()) {
      return fail("too few items");
    }
    if (schema.contains("maxItems") && value.size() > schema["maxItems"].get<std::size_t>()) {
      return fail("too many items");
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (auto err = check(schema["items"], value[i], fmt::format("{}[{}]", path, i))) return err;
      }
    }
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!value.contains(key.get<std::string>())) {
          return fail(fmt::format("missing required property '{}'", key.get<std::string>()));
        }
      }
    }
    const json empty = json::object();
    const json& props = schema.contains("properties") ? schema["properties"] : empty;
    const bool closed = schema.contains("additionalProperties") &&
                        schema["additionalProperties"].is_boolean() &&
                        !schema["additionalProperties"].get<bool>();
    for (const auto& [key, child] : value.items()) {
      if (props.contains(key)) {
        if (auto err = check(props[key], child, path + "." + key)) return err;
      } else if (closed) {
        return fail(fmt::format("unexpected property '{}'", key));
      }
    }
  }
  return std::nullopt;
}

std::optional<json> try_parse(std::string_view text) {
  auto parsed = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) return std::nullopt;
  return parsed;
}

// End index (exclusive) of the balanced value starting at `start`, honoring
// string literals and escapes.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_json(const json& schema, const json& value) {
  return check(schema, value, "$");
}

std::optional<json> extract_json(std::string_view raw) {
  const auto trimmed = trim(raw);
  if (auto whole = try_parse(trimmed)) return whole;

  const auto fence = trimmed.find("```");
  if (fence != std::string_view::npos) {
    const auto body_start = trimmed.find('\n', fence);
    if (body_start != std::string_view::npos) {
      const auto close = trimmed.find("```", body_start);
      if (close != std::string_view::npos) {
        if (auto fenced = try_parse(trimmed.substr(body_start + 1, close - body_start - 1))) {
          return fenced;
        }
      }
    }
  }

  for (std::size_t i = 0; i < trimmed.size(); ++i) {
    if (trimmed[i] != '{' && trimmed[i] != '[') continue;
    const auto end = balanced_end(trimmed, i);
    if (!end) continue;
    if (auto span = try_parse(trimmed.substr(i, *end - i))) return span;
  }
  return std::nullopt;
}

json string_list_schema(std::string_view field) {
  return {{"type", "object"},
          {"properties", {{std::string(field), {{"type", "array"}, {"items", {{"type", "string"}}}}}}},
          {"required", {std::string(field)}}};
}

}  // namespace consult::llm
