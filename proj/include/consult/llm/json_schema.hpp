#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace consult::llm {

// Validates `value` against a JSON-Schema subset: type, properties, required,
// additionalProperties=false, items, enum, minItems, maxItems, minimum,
// maximum, minLength. Returns the first violation as "<path>: <reason>".
std::optional<std::string> validate_json(const nlohmann::json& schema,
                                         const nlohmann::json& value);

// Recovers a JSON value from model output: the whole trimmed text, else the
// first fenced code block, else the first balanced {...} or [...] span.
std::optional<nlohmann::json> extract_json(std::string_view raw);

// Convenience builders for the descriptors used across the pipeline.
nlohmann::json string_list_schema(std::string_view field);

}  // namespace consult::llm
