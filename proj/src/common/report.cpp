#include "consult/common/report.hpp"

#include <algorithm>

namespace consult {

std::size_t ValidationReport::count(std::string_view code) const {
  return static_cast<std::size_t>(std::count_if(
      findings.begin(), findings.end(), [&](const Finding& f) { return f.code == code; }));
}

std::set<std::string> ValidationReport::subjects_with(std::string_view code) const {
  std::set<std::string> out;
  for (const auto& f : findings) {
    if (f.code == code) out.insert(f.subject);
  }
  return out;
}

void ValidationReport::add(std::string code, std::string subject, std::string message) {
  findings.push_back({std::move(code), std::move(subject), std::move(message), std::nullopt});
}

void to_json(nlohmann::json& j, const Finding& f) {
  j = {{"code", f.code}, {"subject", f.subject}, {"message", f.message}};
  if (f.line_number) j["line_number"] = *f.line_number;
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = nlohmann::json{{"findings", r.findings}, {"empty", r.empty()}};
}

}  // namespace consult
