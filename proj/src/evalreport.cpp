#include "delaycast/evalreport.hpp"

#include <algorithm>
#include <sstream>

#include "delaycast/csv.hpp"

namespace delaycast {

namespace {

std::string row_label(TargetMode mode, const std::vector<std::string>& names, std::size_t j) {
  if (mode == TargetMode::Components && j < kComponentCount)
    return std::string(component_label(static_cast<Component>(j)));
  if (mode == TargetMode::Total) return "Arrival Delay";
  return j < names.size() ? names[j] : "y" + std::to_string(j);
}

std::string pad(const std::string& s, std::size_t w, bool right) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

// Column-aligned text; `right[c]` right-aligns column c.
std::string render(const std::vector<std::vector<std::string>>& rows, const std::vector<bool>& right) {
  std::vector<std::size_t> width(right.size(), 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) line += "  ";
      line += pad(r[c], width[c], right[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace

nlohmann::json ModelSummary::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : components)
    comps.push_back({{"component", c.component},
                     {"true_mean", c.true_mean},
                     {"pred_mean", c.pred_mean},
                     {"mae", c.mae}});
  return {{"model", model},
          {"mse", mse},
          {"mae", mae},
          {"target_mode", std::string(to_string(mode))},
          {"rows", rows},
          {"components", comps},
          {"manifest", manifest}};
}

ModelSummary ModelSummary::from_json(const nlohmann::json& j) {
  ModelSummary s;
  try {
    s.model = j.at("model").get<std::string>();
    s.mse = j.at("mse").get<double>();
    s.mae = j.at("mae").get<double>();
    s.mode = parse_target_mode(j.at("target_mode").get<std::string>());
    s.rows = j.at("rows").get<std::size_t>();
    for (const auto& c : j.at("components"))
      s.components.push_back({c.at("component").get<std::string>(), c.at("true_mean").get<double>(),
                              c.at("pred_mean").get<double>(), c.at("mae").get<double>()});
    s.manifest = j.value("manifest", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad summary: ") + e.what());
  }
  if (s.mse < 0 || s.mae < 0) throw ParseError("bad summary: negative error");
  return s;
}

ModelSummary summarize(const std::string& name, TargetMode mode,
                       const std::vector<std::string>& target_names, const Matrix& pred,
                       const Matrix& truth) {
  ModelSummary s;
  s.model = name;
  s.mode = mode;
  s.mse = mse(pred, truth);
  s.mae = mae(pred, truth);
  s.rows = static_cast<std::size_t>(truth.rows());
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    ComponentRow row;
    row.component = row_label(mode, target_names, static_cast<std::size_t>(j));
    row.true_mean = truth.col(j).mean();
    row.pred_mean = pred.col(j).mean();
    row.mae = mae(pred.col(j), truth.col(j));
    s.components.push_back(row);
  }
  return s;
}

ModelSummary evaluate(const Model& model, const FeatureTable& table, const std::string& name) {
  const Matrix pred = model.predict(table);  // checks the schema
  const Matrix truth = aligned_targets(table, model.window());
  return summarize(name.empty() ? std::string(to_string(model.kind())) : name, model.mode,
                   model.target_names, pred, truth);
}

std::vector<ModelSummary> compare(std::vector<ModelSummary> summaries) {
  std::stable_sort(summaries.begin(), summaries.end(), [](const auto& a, const auto& b) {
    if (a.mse != b.mse) return a.mse < b.mse;
    if (a.mae != b.mae) return a.mae < b.mae;
    return a.model < b.model;
  });
  return summaries;
}

std::string format_totals_text(std::span<const ModelSummary> ranked) {
  std::vector<std::vector<std::string>> rows = {{"Rank", "Model", "Target", "MSE", "MAE"}};
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& s = ranked[i];
    rows.push_back({std::to_string(i + 1), s.model, std::string(to_string(s.mode)),
                    format_fixed(s.mse, 3), format_fixed(s.mae, 3)});
  }
  return render(rows, {true, false, false, true, true});
}

std::string format_components_text(const ModelSummary& summary) {
  std::vector<std::vector<std::string>> rows = {
      {"Delay Component", "True Mean", "Prediction Mean", "MAE"}};
  for (const auto& c : summary.components)
    rows.push_back({c.component, format_fixed(c.true_mean, 3), format_fixed(c.pred_mean, 3),
                    format_fixed(c.mae, 3)});
  return render(rows, {false, true, true, true});
}

std::string format_report_text(std::span<const ModelSummary> ranked) {
  std::string out = format_totals_text(ranked);
  for (const auto& s : ranked) {
    if (s.mode != TargetMode::Components) continue;
    out += "\n" + s.model + "\n" + format_components_text(s);
  }
  return out;
}

std::string format_report_csv(std::span<const ModelSummary> ranked) {
  std::ostringstream out;
  write_csv_row(out, {"rank", "model", "target_mode", "component", "true_mean", "pred_mean", "mse", "mae"});
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& s = ranked[i];
    const std::string rank = std::to_string(i + 1);
    const std::string mode(to_string(s.mode));
    write_csv_row(out, {rank, s.model, mode, "total", "", "", format_double(s.mse), format_double(s.mae)});
    for (const auto& c : s.components)
      write_csv_row(out, {rank, s.model, mode, c.component, format_double(c.true_mean),
                          format_double(c.pred_mean), "", format_double(c.mae)});
  }
  return out.str();
}

nlohmann::json report_json(std::span<const ModelSummary> ranked) {
  nlohmann::json models = nlohmann::json::array();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    auto j = ranked[i].to_json();
    j["rank"] = i + 1;
    models.push_back(std::move(j));
  }
  return {{"format", "delaycast-report"}, {"version", 1}, {"models", models}};
}

void export_chart_data(std::span<const ModelSummary> summaries, std::ostream& out) {
  write_csv_row(out, {"model", "metric", "value"});
  for (const auto& s : summaries) {
    write_csv_row(out, {s.model, "MSE", format_double(s.mse)});
    write_csv_row(out, {s.model, "MAE", format_double(s.mae)});
  }
  if (!out) throw Error("io", "failed writing chart data");
}

}  // namespace delaycast
