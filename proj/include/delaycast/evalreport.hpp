#ifndef DELAYCAST_EVALREPORT_HPP
#define DELAYCAST_EVALREPORT_HPP

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "delaycast/features.hpp"
#include "delaycast/model.hpp"

namespace delaycast {

struct ComponentRow {
  std::string component;
  double true_mean = 0.0;
  double pred_mean = 0.0;
  double mae = 0.0;
};

struct ModelSummary {
  std::string model;
  double mse = 0.0;  // over every target entry
  double mae = 0.0;
  TargetMode mode = TargetMode::Components;
  std::size_t rows = 0;
  std::vector<ComponentRow> components;  // one per target column
  nlohmann::json manifest;

  nlohmann::json to_json() const;
  static ModelSummary from_json(const nlohmann::json& j);
};

/// Metrics of `pred` against `truth`, one component row per target column.
ModelSummary summarize(const std::string& name, TargetMode mode,
                       const std::vector<std::string>& target_names, const Matrix& pred,
                       const Matrix& truth);

/// Predicts `table` and scores the predictions against the aligned targets.
/// Throws SchemaError when the table does not match the model.
ModelSummary evaluate(const Model& model, const FeatureTable& table, const std::string& name = "");

/// Ascending by MSE, then MAE, then name.
std::vector<ModelSummary> compare(std::vector<ModelSummary> summaries);

/// Ranked totals as aligned text: rank, model, mode, MSE, MAE.
std::string format_totals_text(std::span<const ModelSummary> ranked);
/// Per-component table: component, true mean, prediction mean, MAE, three
/// decimals.
std::string format_components_text(const ModelSummary& summary);
std::string format_report_text(std::span<const ModelSummary> ranked);
std::string format_report_csv(std::span<const ModelSummary> ranked);
nlohmann::json report_json(std::span<const ModelSummary> ranked);

/// Grouped-bar data: model,metric,value with an MSE and an MAE row per model.
void export_chart_data(std::span<const ModelSummary> summaries, std::ostream& out);

}  // namespace delaycast

#endif  // DELAYCAST_EVALREPORT_HPP
