#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace consult {

struct Finding {
  std::string code;
  std::string subject;  // question id or record id; may be empty
  std::string message;
  std::optional<std::size_t> line_number;

  bool operator==(const Finding&) const = default;
  auto operator<=>(const Finding&) const = default;
};

// Validation outcomes are data, never exceptions.
struct ValidationReport {
  std::vector<Finding> findings;

  bool empty() const { return findings.empty(); }
  std::size_t count(std::string_view code) const;
  std::set<std::string> subjects_with(std::string_view code) const;
  void add(std::string code, std::string subject, std::string message);
};

void to_json(nlohmann::json& j, const Finding& f);
void to_json(nlohmann::json& j, const ValidationReport& r);

}  // namespace consult
