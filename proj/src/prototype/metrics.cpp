#include "consult/prototype/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"

namespace consult::prototype {

namespace {

const std::vector<std::string> kRegression = {"rmse", "mae", "r2"};
const std::vector<std::string> kBinary = {"accuracy", "precision", "recall", "f1", "auc_roc"};
const std::vector<std::string> kMulticlass = {"accuracy", "precision", "recall", "f1"};
const std::vector<std::string> kText = {};

struct Aligned {
  std::vector<const Prediction*> pred;
  std::vector<const Truth*> truth;
};

Aligned align(const std::vector<Prediction>& predictions, const std::vector<Truth>& truth) {
  std::map<std::string, const Prediction*> by_id;
  std::vector<std::string> problems;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.unique_id, &p).second) problems.push_back("duplicate prediction for " + p.unique_id);
  }
  Aligned out;
  std::set<std::string> truth_ids;
  for (const auto& t : truth) {
    if (!truth_ids.insert(t.unique_id).second) {
      problems.push_back("duplicate ground truth for " + t.unique_id);
      continue;
    }
    const auto it = by_id.find(t.unique_id);
    if (it == by_id.end()) {
      problems.push_back("no prediction for " + t.unique_id);
      continue;
    }
    out.pred.push_back(it->second);
    out.truth.push_back(&t);
  }
  for (const auto& [id, p] : by_id) {
    if (!truth_ids.count(id)) problems.push_back("prediction without ground truth: " + id);
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::kIdMisalignment, "predictions and ground truth are not aligned by unique_id", problems);
  }
  return out;
}

double as_number(const Value& v, const std::string& id) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw Error(ErrorCode::kMetric, fmt::format("record {} needs a numeric value", id));
}

std::string as_label(const Value& v) { return value_to_string(v); }

// Ranks with ties sharing their average rank (Mann-Whitney form).
double auc_by_ranks(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<std::pair<double, bool>> all;
  for (double s : pos) all.emplace_back(s, true);
  for (double s : neg) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second) rank_sum += avg;
    }
    i = j;
  }
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

struct Counts {
  double tp = 0, fp = 0, fn = 0;
};

}  // namespace

const std::vector<std::string>& metrics_for_task(data::TaskKind task) {
  switch (task) {
    case data::TaskKind::kRegression: return kRegression;
    case data::TaskKind::kBinaryClassification: return kBinary;
    case data::TaskKind::kMulticlassClassification: return kMulticlass;
    case data::TaskKind::kTextGeneration: return kText;
  }
  return kText;
}

std::vector<std::string> default_metrics(data::TaskKind task) {
  switch (task) {
    case data::TaskKind::kRegression: return {"rmse", "mae", "r2"};
    case data::TaskKind::kBinaryClassification: return {"accuracy", "f1", "auc_roc"};
    case data::TaskKind::kMulticlassClassification: return {"accuracy", "f1"};
    case data::TaskKind::kTextGeneration: return {};
  }
  return {};
}

double concordant_pair_fraction(const std::vector<double>& pos, const std::vector<double>& neg) {
  double total = 0.0;
  for (double p : pos) {
    for (double n : neg) total += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return total / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

MetricReport compute_metrics(const std::vector<Prediction>& predictions, const std::vector<Truth>& truth,
                             data::TaskKind task, const std::vector<std::string>& metric_names,
                             const MetricOptions& options) {
  const auto& allowed = metrics_for_task(task);
  for (const auto& m : metric_names) {
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
      throw Error(ErrorCode::kMetric, fmt::format("metric '{}' is not available for {}", m, data::to_string(task)),
                  allowed);
    }
  }
  const auto a = align(predictions, truth);
  MetricReport report;
  const std::size_t n = a.pred.size();
  auto undefined = [&](const std::string& metric, const std::string& why) {
    report.values[metric] = 0.0;
    report.ill_defined.insert(metric);
    report.warnings.push_back(fmt::format("{} is undefined ({}); reported as 0", metric, why));
  };

  if (task == data::TaskKind::kRegression) {
    double se = 0, ae = 0, mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += as_number(a.truth[i]->value, a.truth[i]->unique_id);
    if (n > 0) mean /= static_cast<double>(n);
    double tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = as_number(a.truth[i]->value, a.truth[i]->unique_id);
      const double p = as_number(a.pred[i]->value, a.pred[i]->unique_id);
      se += (y - p) * (y - p);
      ae += std::abs(y - p);
      tot += (y - mean) * (y - mean);
    }
    for (const auto& m : metric_names) {
      if (n == 0) {
        undefined(m, "no records");
      } else if (m == "rmse") {
        report.values[m] = std::sqrt(se / static_cast<double>(n));
      } else if (m == "mae") {
        report.values[m] = ae / static_cast<double>(n);
      } else if (m == "r2") {
        if (tot == 0.0) {
          undefined(m, "ground truth has zero variance");
        } else {
          report.values[m] = 1.0 - se / tot;
        }
      }
    }
    return report;
  }

  // classification
  std::set<std::string> labels;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = as_label(a.truth[i]->value);
    const auto p = as_label(a.pred[i]->value);
    labels.insert(y);
    labels.insert(p);
    if (y == p) ++correct;
  }
  const bool binary = task == data::TaskKind::kBinaryClassification;
  std::string positive;
  if (binary) {
    positive = options.positive_label.value_or(labels.empty() ? std::string() : *labels.rbegin());
  }

  std::map<std::string, Counts> per_label;
  for (const auto& l : labels) per_label[l];
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = as_label(a.truth[i]->value);
    const auto p = as_label(a.pred[i]->value);
    if (y == p) {
      per_label[y].tp += 1;
    } else {
      per_label[p].fp += 1;
      per_label[y].fn += 1;
    }
  }

  auto prf = [&](const Counts& c, const std::string& tag, double& precision, double& recall, double& f1,
                 std::vector<std::string>& why) {
    precision = recall = f1 = 0.0;
    if (c.tp + c.fp > 0) {
      precision = c.tp / (c.tp + c.fp);
    } else {
      why.push_back(fmt::format("precision{}: no predicted positives", tag));
    }
    if (c.tp + c.fn > 0) {
      recall = c.tp / (c.tp + c.fn);
    } else {
      why.push_back(fmt::format("recall{}: no actual positives", tag));
    }
    if (precision + recall > 0) {
      f1 = 2 * precision * recall / (precision + recall);
    } else {
      why.push_back(fmt::format("f1{}: precision and recall are both 0", tag));
    }
  };

  double precision = 0, recall = 0, f1 = 0;
  std::vector<std::string> why;
  if (binary) {
    prf(per_label[positive], "", precision, recall, f1, why);
  } else {
    for (const auto& [label, c] : per_label) {
      double p = 0, r = 0, f = 0;
      prf(c, fmt::format(" for '{}'", label), p, r, f, why);
      precision += p;
      recall += r;
      f1 += f;
    }
    if (!per_label.empty()) {
      const double k = static_cast<double>(per_label.size());
      precision /= k;
      recall /= k;
      f1 /= k;
    }
  }
  auto flagged = [&](std::string_view metric) {
    return std::any_of(why.begin(), why.end(), [&](const std::string& w) { return w.starts_with(metric); });
  };

  for (const auto& m : metric_names) {
    if (n == 0) {
      undefined(m, "no records");
      continue;
    }
    if (m == "accuracy") {
      report.values[m] = static_cast<double>(correct) / static_cast<double>(n);
    } else if (m == "precision" || m == "recall" || m == "f1") {
      report.values[m] = m == "precision" ? precision : (m == "recall" ? recall : f1);
      if (flagged(m)) {
        report.ill_defined.insert(m);
        for (const auto& w : why) {
          if (w.starts_with(m)) report.warnings.push_back(w + " (counted as 0)");
        }
      }
    } else if (m == "auc_roc") {
      std::vector<double> pos, neg;
      for (std::size_t i = 0; i < n; ++i) {
        if (!a.pred[i]->score) {
          throw Error(ErrorCode::kMetric, fmt::format("auc_roc needs a score for record {}", a.pred[i]->unique_id));
        }
        (as_label(a.truth[i]->value) == positive ? pos : neg).push_back(*a.pred[i]->score);
      }
      if (pos.empty() || neg.empty()) {
        undefined(m, "ground truth has a single class");
      } else {
        report.values[m] = auc_by_ranks(pos, neg);
      }
    }
  }
  return report;
}

std::string normalize_text_answer(std::string_view raw, const std::vector<std::string>& units) {
  std::string s = to_lower(trim(raw));
  // Leading currency symbols (ASCII and common UTF-8 ones).
  for (bool stripped = true; stripped;) {
    stripped = false;
    for (std::string_view sym : {"$", "\xE2\x82\xAC", "\xC2\xA3", "\xC2\xA5"}) {
      if (s.starts_with(sym)) {
        s.erase(0, sym.size());
        s = std::string(trim(s));
        stripped = true;
      }
    }
  }
  static const std::regex group(R"((\d),(\d{3})(?!\d))");
  for (std::string prev; prev != s;) {
    prev = s;
    s = std::regex_replace(s, group, "$1$2");
  }
  for (const auto& unit : units) {
    if (!s.ends_with(unit) || s.size() == unit.size()) continue;
    const char before = s[s.size() - unit.size() - 1];
    if (before == ' ' || std::isdigit(static_cast<unsigned char>(before))) {
      s.erase(s.size() - unit.size());
      s = std::string(trim(s));
      break;
    }
  }
  return s;
}

std::string value_to_string(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return fmt::format("{}", std::get<double>(v));
}

nlohmann::json value_to_json(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

}  // namespace consult::prototype
