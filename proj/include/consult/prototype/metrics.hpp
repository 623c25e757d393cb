#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "consult/data/template.hpp"

namespace consult::prototype {

using Value = std::variant<std::string, double>;

struct Prediction {
  std::string unique_id;
  Value value;
  std::optional<double> score;  // binary: probability of the positive class
};

struct Truth {
  std::string unique_id;
  Value value;
};

struct MetricOptions {
  // Binary positive class; defaults to the lexicographically greater label.
  std::optional<std::string> positive_label;
};

struct MetricReport {
  std::map<std::string, double> values;
  // Metrics whose formula was undefined on this input and were set to 0.
  std::set<std::string> ill_defined;
  std::vector<std::string> warnings;
};

const std::vector<std::string>& metrics_for_task(data::TaskKind task);
std::vector<std::string> default_metrics(data::TaskKind task);

// accuracy    = correct / n
// precision   = TP / (TP + FP), recall = TP / (TP + FN), f1 = 2PR / (P + R)
//               multiclass: unweighted mean over labels seen in truth or predictions
// auc_roc     = P(score_pos > score_neg) + 0.5 P(score_pos == score_neg)
// rmse        = sqrt(mean((y - p)^2)), mae = mean(|y - p|)
// r2          = 1 - SS_res / SS_tot
// Throws kIdMisalignment, or kMetric for unknown/mismatched metrics and auc_roc without scores.
MetricReport compute_metrics(const std::vector<Prediction>& predictions, const std::vector<Truth>& truth,
                             data::TaskKind task, const std::vector<std::string>& metric_names,
                             const MetricOptions& options = {});

// Brute force over all positive/negative pairs; for cross-checks only.
double concordant_pair_fraction(const std::vector<double>& positive_scores,
                                const std::vector<double>& negative_scores);

inline const std::vector<std::string>& default_units() {
  static const std::vector<std::string> units = {"miles per hour", "mph",  "km/h",    "kph",     "usd",
                                                 "dollars",        "dollar", "eur",   "euros",   "percent",
                                                 "%",              "km",   "kg",      "lbs",     "years"};
  return units;
}

// Lowercase, trim, drop leading currency symbols, remove digit-group commas,
// drop one trailing unit from `units`.
std::string normalize_text_answer(std::string_view raw,
                                  const std::vector<std::string>& units = default_units());

std::string value_to_string(const Value& v);
nlohmann::json value_to_json(const Value& v);

}  // namespace consult::prototype
