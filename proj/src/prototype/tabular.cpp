#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/prototype/tools.hpp"
#include "run_support.hpp"

namespace consult::prototype {

using nlohmann::json;
using data::TaskKind;

namespace {

struct Encoder {
  std::vector<std::string> numeric;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::pair<std::string, std::vector<std::string>>> categorical;  // sorted vocab
  std::size_t width = 0;

  static Encoder fit(const data::DatasetSplit& train) {
    Encoder e;
    std::map<std::string, std::vector<double>> num;
    std::map<std::string, std::set<std::string>> cat;
    for (const auto& r : train.records) {
      if (r.input->numerical_features) {
        for (const auto& [k, v] : *r.input->numerical_features) num[k].push_back(v);
      }
      if (r.input->categorical_features) {
        for (const auto& [k, v] : *r.input->categorical_features) cat[k].insert(v);
      }
    }
    for (const auto& [k, values] : num) {
      const double m = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
      double var = 0;
      for (double v : values) var += (v - m) * (v - m);
      var /= static_cast<double>(values.size());
      e.numeric.push_back(k);
      e.mean.push_back(m);
      e.stddev.push_back(var > 0 ? std::sqrt(var) : 1.0);
    }
    for (const auto& [k, vocab] : cat) e.categorical.emplace_back(k, std::vector<std::string>(vocab.begin(), vocab.end()));
    e.width = e.numeric.size();
    for (const auto& [k, vocab] : e.categorical) e.width += vocab.size();
    return e;
  }

  std::vector<double> encode(const data::DataRecord& r) const {
    std::vector<double> x(width, 0.0);
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      const auto& feats = r.input->numerical_features;
      if (!feats) continue;
      const auto it = feats->find(numeric[i]);
      if (it != feats->end()) x[i] = (it->second - mean[i]) / stddev[i];
    }
    std::size_t offset = numeric.size();
    for (const auto& [key, vocab] : categorical) {
      const auto& feats = r.input->categorical_features;
      if (feats) {
        const auto it = feats->find(key);
        if (it != feats->end()) {
          const auto pos = std::lower_bound(vocab.begin(), vocab.end(), it->second);
          if (pos != vocab.end() && *pos == it->second) x[offset + static_cast<std::size_t>(pos - vocab.begin())] = 1.0;
        }
      }
      offset += vocab.size();
    }
    return x;
  }

  json to_json() const {
    json num = json::array();
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      num.push_back({{"name", numeric[i]}, {"mean", mean[i]}, {"std", stddev[i]}});
    }
    json cat = json::array();
    for (const auto& [k, vocab] : categorical) cat.push_back({{"name", k}, {"categories", vocab}});
    return {{"numerical", num}, {"categorical", cat}};
  }
};

std::vector<std::string> sorted_labels(const data::DatasetSplit& train) {
  std::set<std::string> labels;
  for (const auto& r : train.records) labels.insert(*r.output->categorical);
  return {labels.begin(), labels.end()};
}

std::vector<Truth> truth_of(const data::DatasetSplit& split, TaskKind task) {
  std::vector<Truth> out;
  for (const auto& r : split.records) {
    if (task == TaskKind::kRegression) {
      out.push_back({r.unique_id, *r.output->numerical});
    } else {
      out.push_back({r.unique_id, *r.output->categorical});
    }
  }
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void softmax(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0;
  for (auto& v : z) s += (v = std::exp(v - m));
  for (auto& v : z) v /= s;
}

// K output rows of (width weights + bias). Regression and binary use K = 1.
struct LinearModel {
  TaskKind task = TaskKind::kRegression;
  std::size_t width = 0;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;  // classification, sorted
  std::string positive;             // binary
  double target_mean = 0;
  double target_std = 1;

  std::vector<double> raw(const std::vector<double>& x) const {
    std::vector<double> z(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double s = rows[k][width];
      for (std::size_t i = 0; i < width; ++i) s += rows[k][i] * x[i];
      z[k] = s;
    }
    return z;
  }

  Prediction predict(const std::string& id, const std::vector<double>& x) const {
    auto z = raw(x);
    switch (task) {
      case TaskKind::kRegression:
        return {id, z[0] * target_std + target_mean, std::nullopt};
      case TaskKind::kBinaryClassification: {
        const double p = sigmoid(z[0]);
        const std::string& negative = labels.front() == positive ? labels.back() : labels.front();
        return {id, p >= 0.5 ? positive : negative, p};
      }
      default: {
        softmax(z);
        const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
        return {id, labels[best], std::nullopt};
      }
    }
  }
};

struct Encoded {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> x;
  std::vector<double> y;           // regression: standardized target; binary: 0/1
  std::vector<std::size_t> klass;  // multiclass index
};

Encoded encode_split(const data::DatasetSplit& split, const Encoder& enc, const LinearModel& m) {
  Encoded out;
  for (const auto& r : split.records) {
    out.ids.push_back(r.unique_id);
    out.x.push_back(enc.encode(r));
    if (m.task == TaskKind::kRegression) {
      out.y.push_back((*r.output->numerical - m.target_mean) / m.target_std);
    } else if (m.task == TaskKind::kBinaryClassification) {
      out.y.push_back(*r.output->categorical == m.positive ? 1.0 : 0.0);
    } else {
      const auto pos = std::lower_bound(m.labels.begin(), m.labels.end(), *r.output->categorical);
      out.klass.push_back(pos != m.labels.end() && *pos == *r.output->categorical
                              ? static_cast<std::size_t>(pos - m.labels.begin())
                              : m.labels.size());
    }
  }
  return out;
}

void gradient_step(LinearModel& m, const Encoded& data, const std::vector<std::size_t>& batch, double lr, double l2) {
  const std::size_t K = m.rows.size();
  std::vector<std::vector<double>> grad(K, std::vector<double>(m.width + 1, 0.0));
  for (std::size_t idx : batch) {
    const auto& x = data.x[idx];
    auto z = m.raw(x);
    std::vector<double> err(K);
    if (m.task == TaskKind::kRegression) {
      err[0] = z[0] - data.y[idx];
    } else if (m.task == TaskKind::kBinaryClassification) {
      err[0] = sigmoid(z[0]) - data.y[idx];
    } else {
      softmax(z);
      for (std::size_t k = 0; k < K; ++k) err[k] = z[k] - (data.klass[idx] == k ? 1.0 : 0.0);
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < m.width; ++i) grad[k][i] += err[k] * x[i];
      grad[k][m.width] += err[k];
    }
  }
  const double n = static_cast<double>(batch.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i <= m.width; ++i) {
      double g = grad[k][i] / n;
      if (i < m.width) g += l2 * m.rows[k][i];
      m.rows[k][i] -= lr * g;
    }
  }
}

// Higher is better: accuracy, or negated rmse on the original scale.
double selection_score(const LinearModel& m, const Encoded& data) {
  if (data.ids.empty()) return 0;
  double acc = 0;
  for (std::size_t i = 0; i < data.ids.size(); ++i) {
    if (m.task == TaskKind::kRegression) {
      const double d = (m.raw(data.x[i])[0] - data.y[i]) * m.target_std;
      acc += d * d;
    } else {
      const auto p = m.predict(data.ids[i], data.x[i]);
      const auto& label = std::get<std::string>(p.value);
      if (m.task == TaskKind::kBinaryClassification) {
        acc += ((label == m.positive) == (data.y[i] > 0.5)) ? 1 : 0;
      } else {
        acc += (data.klass[i] < m.labels.size() && m.labels[data.klass[i]] == label) ? 1 : 0;
      }
    }
  }
  const double n = static_cast<double>(data.ids.size());
  return m.task == TaskKind::kRegression ? -std::sqrt(acc / n) : acc / n;
}

std::string fmt_value(const Value& v) { return value_to_string(v); }

}  // namespace

ToolRunResult run_tabular_tool(const ToolRequest& request, const ToolRegistry& registry) {
  const ToolSpec* spec = registry.find(request.tool_name);
  if (spec == nullptr) throw Error(ErrorCode::kUnknownTool, fmt::format("unknown tool '{}'", request.tool_name));
  if (spec->name != kTabularBaseline && spec->name != kTabularLinear) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("'{}' is not a tabular tool", spec->name));
  }
  const json params = validate_params(*spec, request.hyperparameters);
  const TaskKind task = task_of(params);

  detail::RunArtifacts artifacts(request.output_uri);
  artifacts.log(fmt::format("tool: {}", spec->name));
  artifacts.log(fmt::format("task: {}", data::to_string(task)));
  artifacts.log(fmt::format("params: {}", params.dump()));
  artifacts.log(fmt::format("compute_profile: {} (ignored, runs locally)", request.compute_profile));

  std::vector<std::string> metric_names = request.metric_names.empty() ? default_metrics(task) : request.metric_names;
  for (const auto& name : metric_names) {
    const auto& allowed = metrics_for_task(task);
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      return detail::failed(fmt::format("metric '{}' does not apply to {}", name, data::to_string(task)),
                            {{"invalid_metric", name, "not defined for this task", {}}}, &artifacts);
    }
  }

  detail::Inputs in;
  auto findings = detail::load_inputs(request.input_uri, task, true, in);
  if (!findings.empty()) return detail::failed("input data failed template validation", std::move(findings), &artifacts);
  artifacts.log(fmt::format("splits: train={} validation={} test={}", in.train->records.size(),
                            in.validation ? in.validation->records.size() : 0, in.test->records.size()));

  ToolRunResult result;
  MetricOptions metric_options;
  json manifest = {{"format_version", 1}, {"tool", spec->name}, {"task", data::to_string(task)}, {"params", params}};

  if (spec->name == kTabularBaseline) {
    Value constant;
    std::optional<double> score;
    if (task == TaskKind::kRegression) {
      double sum = 0;
      for (const auto& r : in.train->records) sum += *r.output->numerical;
      constant = sum / static_cast<double>(in.train->records.size());
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& r : in.train->records) ++counts[*r.output->categorical];
      // map order makes ties resolve to the smallest label
      auto best = counts.begin();
      for (auto it = counts.begin(); it != counts.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      constant = best->first;
      manifest["label_counts"] = counts;
      if (task == TaskKind::kBinaryClassification) {
        const std::string& positive = counts.rbegin()->first;
        score = static_cast<double>(counts.rbegin()->second) / static_cast<double>(in.train->records.size());
        metric_options.positive_label = positive;
        manifest["positive_label"] = positive;
      }
    }
    manifest["prediction"] = value_to_json(constant);
    artifacts.log(fmt::format("constant prediction: {}", fmt_value(constant)));
    for (const auto& r : in.test->records) result.predictions.push_back({r.unique_id, constant, score});
  } else {
    const Encoder enc = Encoder::fit(*in.train);
    LinearModel model;
    model.task = task;
    model.width = enc.width;
    if (task == TaskKind::kRegression) {
      double sum = 0;
      for (const auto& r : in.train->records) sum += *r.output->numerical;
      model.target_mean = sum / static_cast<double>(in.train->records.size());
      double var = 0;
      for (const auto& r : in.train->records) var += std::pow(*r.output->numerical - model.target_mean, 2);
      var /= static_cast<double>(in.train->records.size());
      model.target_std = var > 0 ? std::sqrt(var) : 1.0;
      model.rows.assign(1, std::vector<double>(enc.width + 1, 0.0));
    } else {
      model.labels = sorted_labels(*in.train);
      if (task == TaskKind::kBinaryClassification) {
        const std::string requested =
            params.contains("positive_label") && params["positive_label"].is_string() ? params["positive_label"].get<std::string>() : "";
        if (!requested.empty()) {
          if (std::find(model.labels.begin(), model.labels.end(), requested) == model.labels.end()) {
            return detail::failed(fmt::format("positive_label '{}' does not occur in train", requested),
                                  {{"invalid_positive_label", requested, "label absent from train", {}}}, &artifacts);
          }
          model.positive = requested;
        } else {
          model.positive = model.labels.back();
        }
        metric_options.positive_label = model.positive;
        model.rows.assign(1, std::vector<double>(enc.width + 1, 0.0));
      } else {
        model.rows.assign(model.labels.size(), std::vector<double>(enc.width + 1, 0.0));
      }
    }

    const Encoded train = encode_split(*in.train, enc, model);
    const Encoded validation = in.validation ? encode_split(*in.validation, enc, model) : Encoded{};
    const double lr = params.at("learning_rate").get<double>();
    const double l2 = params.at("l2").get<double>();
    const auto epochs = params.at("epochs").get<std::int64_t>();
    const auto batch_size = static_cast<std::size_t>(params.at("batch_size").get<std::int64_t>());
    std::mt19937_64 rng(static_cast<std::uint64_t>(params.at("seed").get<std::int64_t>()));

    std::vector<std::size_t> order(train.ids.size());
    std::iota(order.begin(), order.end(), 0);
    LinearModel best = model;
    double best_score = -std::numeric_limits<double>::infinity();
    std::int64_t best_epoch = epochs;
    for (std::int64_t epoch = 1; epoch <= epochs; ++epoch) {
      if (batch_size == 0 || batch_size >= order.size()) {
        gradient_step(model, train, order, lr, l2);
      } else {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
          const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(
                                                                   std::min(order.size(), start + batch_size)));
          gradient_step(model, train, batch, lr, l2);
        }
      }
      if (!validation.ids.empty()) {
        const double s = selection_score(model, validation);
        if (s > best_score) {
          best_score = s;
          best = model;
          best_epoch = epoch;
        }
      }
    }
    if (validation.ids.empty()) {
      best = model;
      artifacts.log(fmt::format("no validation split; keeping epoch {}", epochs));
    } else {
      artifacts.log(fmt::format("best validation epoch {} score {:.6g}", best_epoch, best_score));
    }
    bool finite = true;
    for (const auto& row : best.rows) {
      for (double w : row) finite = finite && std::isfinite(w);
    }
    if (!finite) {
      return detail::failed("training diverged to non-finite weights; lower learning_rate", {}, &artifacts);
    }

    for (const auto& r : in.test->records) result.predictions.push_back(best.predict(r.unique_id, enc.encode(r)));
    manifest["features"] = enc.to_json();
    manifest["best_epoch"] = best_epoch;
    manifest["weights"] = best.rows;
    if (task == TaskKind::kRegression) {
      manifest["target"] = {{"mean", best.target_mean}, {"std", best.target_std}};
    } else {
      manifest["labels"] = best.labels;
      if (task == TaskKind::kBinaryClassification) manifest["positive_label"] = best.positive;
    }
  }

  const auto report = compute_metrics(result.predictions, truth_of(*in.test, task), task, metric_names, metric_options);
  result.metrics = report.values;
  result.ill_defined_metrics = report.ill_defined;
  result.warnings = report.warnings;
  for (const auto& [name, value] : report.values) artifacts.log(fmt::format("metric {} = {:.6g}", name, value));
  for (const auto& w : result.warnings) artifacts.log("warning: " + w);
  result.status = result.warnings.empty() ? RunStatus::kSucceeded : RunStatus::kSucceededWithWarnings;
  artifacts.log(fmt::format("status: {}", to_string(result.status)));

  artifacts.write_predictions(result.predictions);
  artifacts.write_metrics(detail::metrics_document(result, nullptr));
  artifacts.write_manifest(manifest);
  artifacts.write_log();
  result.model_artifact_uri = artifacts.model_uri();
  result.log_uri = artifacts.log_uri();
  return result;
}

}  // namespace consult::prototype
