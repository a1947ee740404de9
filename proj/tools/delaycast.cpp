// delaycast: one subcommand per pipeline stage.
//
//   synth -> preprocess -> [analyze] -> [features] -> train -> evaluate -> report
//
// Every command writes <output>.manifest.json next to its primary output.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "delaycast/csv.hpp"
#include "delaycast/evalreport.hpp"
#include "delaycast/features.hpp"
#include "delaycast/model.hpp"
#include "delaycast/model_io.hpp"
#include "delaycast/preprocess.hpp"
#include "delaycast/schema.hpp"
#include "delaycast/stats.hpp"
#include "delaycast/synth.hpp"

using namespace delaycast;
using nlohmann::json;

namespace {

void log(const std::string& msg) { std::cerr << "[delaycast] " << msg << "\n"; }

std::string quote_msg(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out;
}

int fail(const std::string& code, const std::string& msg) {
  std::cerr << "error: code=" << code << " msg=\"" << quote_msg(msg) << "\"\n";
  return code == "usage" ? 2 : 1;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("io", "failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Run {
  explicit Run(std::string c) : command(std::move(c)) {}

  std::string command;
  json config = json::object();
  json decisions = json::object();
  json inputs = json::array();
  json outputs = json::array();
  std::optional<std::uint64_t> seed;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& beside) const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json m = {{"command", command}, {"config", config},   {"decisions", decisions},
              {"inputs", inputs},   {"outputs", outputs}, {"wall_time_s", secs}};
    m["seed"] = seed ? json(*seed) : json(nullptr);
    write_text(beside + ".manifest.json", m.dump(2) + "\n");
  }
};

std::vector<FlightRecord> load_records(const std::string& path, bool strict) {
  auto result = read_csv_file(path);
  for (const auto& d : result.diagnostics) std::cerr << d.to_string() << "\n";
  if (!result.diagnostics.empty()) {
    log(std::to_string(result.diagnostics.size()) + " row(s) skipped in " + path);
    if (strict) throw DataError(std::to_string(result.diagnostics.size()) + " bad row(s) in " + path);
  }
  return std::move(result.records);
}

// Table for training or evaluation: a feature-table sidecar is used as is,
// a record CSV is encoded and split chronologically.
struct LoadedTable {
  FeatureTable table;
  std::optional<LabelCodebook> codebook;
  bool from_records = false;
};

LoadedTable load_input_table(const std::string& path, std::optional<TargetMode> mode,
                             const LabelCodebook* codebook, bool allow_unknown) {
  LoadedTable out;
  if (ends_with(path, ".json")) {
    auto bundle = load_table(path);
    out.table = std::move(bundle.table);
    out.codebook = std::move(bundle.codebook);
    return out;
  }
  const auto records = load_records(path, false);
  out.codebook = codebook ? *codebook : fit_codebook(records);
  out.table = build_table(records, *out.codebook, mode.value_or(TargetMode::Components), allow_unknown);
  out.from_records = true;
  return out;
}

// --config support: keys of the JSON object (or of its section named after
// the subcommand) become flags unless the command line already has them.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;
  json cfg;
  try {
    cfg = json::parse(read_text(config_path));
  } catch (const json::exception& e) {
    throw ParseError("config " + config_path + ": " + e.what());
  }
  if (!cfg.is_object()) throw ParseError("config " + config_path + ": expected a JSON object");
  const std::string sub = rest.empty() ? "" : rest.front();
  json flat = json::object();
  for (auto& [k, v] : cfg.items())
    if (!v.is_object()) flat[k] = v;
  if (cfg.contains(sub) && cfg[sub].is_object())
    for (auto& [k, v] : cfg[sub].items()) flat[k] = v;

  auto given = [&](const std::string& flag) {
    for (const auto& a : rest)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  auto scalar = [](const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    return v.dump();
  };
  for (auto& [k, v] : flat.items()) {
    const std::string flag = "--" + k;
    if (given(flag)) continue;
    if (v.is_boolean()) {
      if (v.get<bool>()) rest.push_back(flag);
      continue;
    }
    rest.push_back(flag);
    if (v.is_array()) {
      for (const auto& e : v) rest.push_back(scalar(e));
    } else {
      rest.push_back(scalar(v));
    }
  }
  return rest;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  SynthConfig cfg;
  std::string out, labels, start_date = "2023-01-01";
};

void run_synth(SynthArgs& a) {
  a.cfg.start_date = parse_date(a.start_date);
  if (a.labels.empty()) a.labels = a.out + ".labels.csv";
  const auto result = generate(a.cfg);
  write_csv_file(result.records, a.out);
  {
    std::ofstream lf(a.labels, std::ios::binary | std::ios::trunc);
    if (!lf) throw Error("io", "cannot write '" + a.labels + "'");
    write_labels(result.labels, lf);
  }
  Run run("synth");
  run.config = a.cfg.to_json();
  run.seed = a.cfg.seed;
  run.outputs = {a.out, a.labels};
  json counts = json::object();
  for (auto l : {RowLabel::Clean, RowLabel::Cancelled, RowLabel::Missing, RowLabel::Mismatch,
                 RowLabel::Outlier})
    counts[std::string(to_string(l))] = result.count(l);
  run.decisions = {{"label_counts", counts}, {"planted_iqr_upper", result.iqr_upper}};
  run.write(a.out);
  log("synth: wrote " + std::to_string(result.records.size()) + " rows to " + a.out);
}

struct PreprocessArgs {
  std::string in, out, report;
  double tolerance = kDefaultSumTolerance;
};

void run_preprocess(PreprocessArgs& a) {
  if (a.report.empty()) a.report = a.out + ".report.txt";
  const auto records = load_records(a.in, false);
  const auto result = run_pipeline(records, a.tolerance);
  write_csv_file(result.retained, a.out);
  write_text(a.report, result.report.to_key_value());
  const std::string stages = a.out + ".stages.csv";
  write_text(stages, result.report.to_csv());
  Run run("preprocess");
  run.config = {{"in", a.in}, {"out", a.out}, {"report", a.report}, {"tolerance", a.tolerance}};
  run.decisions = {{"order", {"cancelled_or_diverted", "missing_components", "sum_check", "iqr"}},
                   {"sum_tolerance_minutes", a.tolerance},
                   {"iqr_multiplier", 1.5},
                   {"iqr_bounds_inclusive", true}};
  run.inputs = {a.in};
  run.outputs = {a.out, a.report, stages};
  run.write(a.out);
  std::cout << result.report.to_key_value();
}

struct AnalyzeArgs {
  std::string in, out;
  double alpha = kDefaultRedundancyAlpha;
};

void run_analyze(AnalyzeArgs& a) {
  if (a.out.empty()) a.out = a.in;
  const auto records = load_records(a.in, false);
  const auto cols = analysis_columns(records);
  const auto corr = correlation_table(cols, cols.at("ARR_DELAY"), continuous_attributes());
  const auto red = redundancy_report(records, a.alpha);
  const std::string corr_path = a.out + ".correlation.csv";
  const std::string red_path = a.out + ".redundancy.csv";
  write_text(corr_path, correlation_csv(corr));
  write_text(red_path, redundancy_csv(red));
  std::cout << "Pearson correlation with ARR_DELAY\n";
  for (const auto& r : corr) std::cout << "  " << r.attribute << "  " << format_fixed(r.r, 4) << "\n";
  std::cout << "Kruskal-Wallis redundancy (alpha " << format_double(a.alpha) << ")\n";
  for (const auto& r : red)
    std::cout << "  " << r.candidate << " vs " << r.primary << ": min p " << format_fixed(r.min_p_value, 4)
              << (r.redundant ? "  redundant" : "  informative") << "\n";
  Run run("analyze");
  run.config = {{"in", a.in}, {"out", a.out}, {"alpha", a.alpha}};
  run.decisions = {{"correlation", "pearson"}, {"redundancy_test", "kruskal_wallis"}};
  run.inputs = {a.in};
  run.outputs = {corr_path, red_path};
  run.write(a.out);
}

struct FeaturesArgs {
  std::string in, out, targets = "components";
  double split = kDefaultTrainFraction;
  bool standardize = false;
};

void run_features(FeaturesArgs& a) {
  const auto mode = parse_target_mode(a.targets);
  const auto records = load_records(a.in, false);
  const auto codebook = fit_codebook(records);
  const auto table = build_table(records, codebook, mode);
  auto [train, test] = chronological_split(table, a.split);
  std::optional<Standardizer> scaler;
  if (a.standardize) {
    scaler = Standardizer::fit(train.X, continuous_feature_columns(), ZeroVariance::CenterOnly);
    train.X = scaler->apply(train.X);
    test.X = scaler->apply(test.X);
  }
  save_table({train, codebook, scaler}, a.out + ".train");
  save_table({test, codebook, scaler}, a.out + ".test");
  Run run("features");
  run.config = {{"in", a.in}, {"out", a.out}, {"targets", a.targets}, {"split", a.split},
                {"standardize", a.standardize}};
  run.decisions = {{"clock_encoding", "minutes_past_midnight"},
                   {"label_encoding", "sorted_category_index"},
                   {"split", "chronological_floor"},
                   {"year_feature", "retained; later years may be absent from train"}};
  run.inputs = {a.in};
  run.outputs = {a.out + ".train.json", a.out + ".test.json"};
  run.write(a.out);
  log("features: " + std::to_string(train.rows()) + " train / " + std::to_string(test.rows()) +
      " test rows");
}

struct TrainArgs {
  std::string in, out, model, targets, checkpoint;
  int window = 1;
  std::uint64_t seed = 0;
  int epochs = 50;
  std::optional<int> batch;
  double split = kDefaultTrainFraction;
  double validation = 0.2;
  int patience = 5;
  double learning_rate = 1e-3;
  double clip = 1.0;
  bool shuffle = false;
  std::optional<int> units;
  int max_depth = -1, min_leaf = -1, trees = 100, rounds = 100;
  double eta = 0.3, lambda = 1.0, gamma = 0.0;
};

void run_train(TrainArgs& a) {
  std::vector<std::string> problems;
  ModelKind kind{};
  try {
    kind = parse_model_kind(a.model);
  } catch (const DataError& e) {
    problems.push_back(e.what());
  }
  std::optional<TargetMode> mode;
  if (!a.targets.empty()) mode = parse_target_mode(a.targets);
  const bool neural = problems.empty() && is_neural(kind);
  if (problems.empty() && !neural && a.window != 1)
    problems.push_back("--window applies to neural models only");
  if (a.window < 1) problems.push_back("--window must be >= 1");
  if (!(a.split > 0.0 && a.split < 1.0)) problems.push_back("--split must lie in (0, 1)");

  ModelOptions opt;
  opt.window = a.window;
  opt.seed = a.seed;
  opt.train.epochs = a.epochs;
  opt.train.batch_size = a.batch.value_or(problems.empty() && kind == ModelKind::Mlp ? 32 : 256);
  opt.train.validation_fraction = a.validation;
  opt.train.patience = a.patience;
  opt.train.adam.learning_rate = a.learning_rate;
  opt.train.clip_norm = a.clip > 0 ? std::optional<double>(a.clip) : std::nullopt;
  opt.train.shuffle = a.shuffle;
  opt.checkpoint_path = a.checkpoint;
  if (neural) {
    try {
      opt.train.validate();
    } catch (const DataError& e) {
      problems.push_back(e.what());
    }
  }
  if (problems.empty()) {
    if (kind == ModelKind::Tree) {
      if (a.max_depth > 0) opt.tree.max_depth = a.max_depth;
      if (a.min_leaf > 0) opt.tree.min_samples_leaf = a.min_leaf;
    } else if (kind == ModelKind::Forest) {
      opt.forest.n_estimators = a.trees;
      if (a.max_depth > 0) opt.forest.max_depth = a.max_depth;
      if (a.min_leaf > 0) opt.forest.min_samples_leaf = a.min_leaf;
    } else if (kind == ModelKind::Gbt) {
      opt.gbt.rounds = a.rounds;
      opt.gbt.eta = a.eta;
      opt.gbt.lambda = a.lambda;
      opt.gbt.gamma = a.gamma;
      if (a.max_depth > 0) opt.gbt.max_depth = a.max_depth;
      if (a.min_leaf > 0) opt.gbt.min_samples_leaf = a.min_leaf;
    }
  }
  if (neural) {
    NetworkConfig net = network_config(network_kind(kind), 1, a.window);
    if (a.units) net.units = *a.units;
    if (a.window < net.min_window())
      problems.push_back(std::string(to_string(kind)) + " needs --window >= " + std::to_string(net.min_window()));
    opt.network = net;
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error("usage", msg);
  }

  auto loaded = load_input_table(a.in, mode, nullptr, false);
  if (!loaded.from_records && mode && *mode != loaded.table.mode)
    throw SchemaError("--targets " + a.targets + " conflicts with table mode " +
                      std::string(to_string(loaded.table.mode)));
  FeatureTable train = loaded.table;
  if (loaded.from_records) train = chronological_split(loaded.table, a.split).first;
  opt.mode = train.mode;

  auto model = make_model(kind, opt);
  model->codebook = loaded.codebook;
  log("train: " + a.model + " on " + std::to_string(train.rows()) + " rows");
  model->fit(train);
  save_model(*model, a.out);

  Run run("train");
  run.config = {{"in", a.in}, {"out", a.out}, {"model", a.model},
                {"targets", std::string(to_string(train.mode))}, {"window", model->window()},
                {"split", a.split}, {"model_config", model->config()}};
  run.seed = a.seed;
  run.decisions = {{"train_rows", train.rows()}, {"split", "chronological"},
                   {"year_feature", "retained; later years may be absent from train"}};
  if (neural) {
    run.decisions["standardization"] = "inputs and targets z-scored on train rows, zero-variance columns centred only";
    run.decisions["validation"] = "chronological_tail";
    run.decisions["early_stopping"] = {{"monitor", "val_mse"}, {"patience", a.patience}, {"min_delta", 0}};
    run.decisions["init"] = "glorot_uniform, forget_bias=1";
    run.decisions["batch_order"] = a.shuffle ? "seeded_shuffle" : "chronological";
    run.decisions["history"] = model->history;
  }
  run.inputs = {a.in};
  run.outputs = {a.out};
  if (!a.checkpoint.empty()) run.outputs.push_back(a.checkpoint);
  run.write(a.out);
}

struct EvaluateArgs {
  std::string model_file, in, report_out, split = "test", name;
  double train_fraction = kDefaultTrainFraction;
};

void run_evaluate(EvaluateArgs& a) {
  if (a.split != "test" && a.split != "all") throw Error("usage", "--split must be test or all");
  auto model = load_model(a.model_file);
  const LabelCodebook* cb = model->codebook ? &*model->codebook : nullptr;
  auto loaded = load_input_table(a.in, model->mode, cb, true);
  FeatureTable table = loaded.table;
  if (loaded.from_records && a.split == "test")
    table = chronological_split(loaded.table, a.train_fraction).second;
  auto summary = evaluate(*model, table, a.name.empty() ? std::string(to_string(model->kind())) : a.name);
  summary.manifest = {{"model_file", a.model_file}, {"input", a.in}, {"split", a.split},
                      {"window", model->window()}, {"seed", model->seed}};
  write_text(a.report_out, summary.to_json().dump(2) + "\n");
  std::cout << format_totals_text(std::span<const ModelSummary>(&summary, 1));
  if (summary.mode == TargetMode::Components) std::cout << "\n" << format_components_text(summary);
  Run run("evaluate");
  run.config = {{"model_file", a.model_file}, {"in", a.in}, {"report_out", a.report_out},
                {"split", a.split}, {"name", summary.model}};
  run.seed = model->seed;
  run.decisions = {{"total_error", "mean_over_all_target_entries"}};
  run.inputs = {a.model_file, a.in};
  run.outputs = {a.report_out};
  run.write(a.report_out);
}

struct ReportArgs {
  std::vector<std::string> summaries;
  std::string format = "text", out, chart_out;
};

void run_report(ReportArgs& a) {
  std::vector<ModelSummary> all;
  for (const auto& p : a.summaries) {
    try {
      all.push_back(ModelSummary::from_json(json::parse(read_text(p))));
    } catch (const json::exception& e) {
      throw ParseError(p + ": " + e.what());
    }
  }
  const auto ranked = compare(all);
  std::string body;
  if (a.format == "text") {
    body = format_report_text(ranked);
  } else if (a.format == "csv") {
    body = format_report_csv(ranked);
  } else if (a.format == "json") {
    body = report_json(ranked).dump(2) + "\n";
  } else {
    throw Error("usage", "--format must be text, csv or json");
  }
  if (a.out.empty()) {
    std::cout << body;
  } else {
    write_text(a.out, body);
  }
  if (!a.chart_out.empty()) {
    std::ofstream chart(a.chart_out, std::ios::binary | std::ios::trunc);
    if (!chart) throw Error("io", "cannot write '" + a.chart_out + "'");
    export_chart_data(ranked, chart);
  }
  Run run("report");
  run.config = {{"summaries", a.summaries}, {"format", a.format}, {"out", a.out}, {"chart_out", a.chart_out}};
  run.decisions = {{"ranking", "mse, then mae, then name"}};
  run.inputs = a.summaries;
  if (!a.out.empty()) run.outputs.push_back(a.out);
  if (!a.chart_out.empty()) run.outputs.push_back(a.chart_out);
  const std::string beside = !a.out.empty() ? a.out : !a.chart_out.empty() ? a.chart_out : "report";
  run.write(beside);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    args = expand_config(args);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  }

  CLI::App app{"delaycast: flight delay regression toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto seed_opt = [](CLI::App* s, std::uint64_t& seed) {
    s->add_option("--seed", seed, "random seed")->envname("DELAYCAST_SEED");
  };

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate synthetic records with row labels");
  synth->add_option("--count", sa.cfg.count, "rows")->check(CLI::PositiveNumber);
  seed_opt(synth, sa.cfg.seed);
  synth->add_option("--out", sa.out, "record CSV")->required();
  synth->add_option("--labels", sa.labels, "label CSV (default <out>.labels.csv)");
  synth->add_option("--start-date", sa.start_date, "first FL_DATE");
  synth->add_option("--days", sa.cfg.days, "calendar days spanned");
  synth->add_option("--airlines", sa.cfg.airlines, "airline vocabulary size");
  synth->add_option("--airports", sa.cfg.airports, "airport vocabulary size");
  synth->add_option("--cancel-rate", sa.cfg.cancel_rate);
  synth->add_option("--missing-rate", sa.cfg.missing_rate);
  synth->add_option("--mismatch-rate", sa.cfg.mismatch_rate);
  synth->add_option("--outlier-rate", sa.cfg.outlier_rate);
  synth->add_option("--outlier-magnitude", sa.cfg.outlier_magnitude);

  PreprocessArgs pa;
  auto* pre = app.add_subcommand("preprocess", "prune records and report each stage");
  pre->add_option("--in", pa.in)->required();
  pre->add_option("--out", pa.out)->required();
  pre->add_option("--report", pa.report, "key=value report (default <out>.report.txt)");
  pre->add_option("--tolerance", pa.tolerance, "component sum tolerance, minutes");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "correlation and redundancy tables");
  analyze->add_option("--in", aa.in)->required();
  analyze->add_option("--out", aa.out, "output prefix (default: input path)");
  analyze->add_option("--alpha", aa.alpha);

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "encode records into train/test tables");
  features->add_option("--in", fa.in)->required();
  features->add_option("--out", fa.out, "output prefix")->required();
  features->add_option("--targets", fa.targets)->check(CLI::IsMember({"components", "total"}));
  features->add_option("--split", fa.split, "train fraction");
  features->add_flag("--standardize", fa.standardize, "z-score the continuous columns");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "fit one model and save it");
  train->add_option("--in", ta.in, "pruned CSV or feature-table JSON")->required();
  train->add_option("--model", ta.model, "ols|tree|forest|gbt|mlp|lstm|bilstm|hybrid")->required();
  train->add_option("--targets", ta.targets)->check(CLI::IsMember({"components", "total"}));
  train->add_option("--window", ta.window, "sequence length T");
  seed_opt(train, ta.seed);
  train->add_option("--epochs", ta.epochs);
  train->add_option("--batch", ta.batch);
  train->add_option("--out", ta.out, "model file")->required();
  train->add_option("--checkpoint", ta.checkpoint, "best-epoch checkpoint file");
  train->add_option("--split", ta.split, "train fraction of a record CSV");
  train->add_option("--validation", ta.validation);
  train->add_option("--patience", ta.patience);
  train->add_option("--learning-rate", ta.learning_rate);
  train->add_option("--clip", ta.clip, "global gradient norm clip, 0 disables");
  train->add_flag("--shuffle", ta.shuffle, "seeded shuffle of batch order");
  train->add_option("--units", ta.units, "recurrent units");
  train->add_option("--max-depth", ta.max_depth);
  train->add_option("--min-leaf", ta.min_leaf);
  train->add_option("--trees", ta.trees);
  train->add_option("--rounds", ta.rounds);
  train->add_option("--eta", ta.eta);
  train->add_option("--lambda", ta.lambda);
  train->add_option("--gamma", ta.gamma);

  EvaluateArgs ea;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a saved model");
  evaluate_cmd->add_option("--model-file", ea.model_file)->required();
  evaluate_cmd->add_option("--in", ea.in, "pruned CSV or feature-table JSON")->required();
  evaluate_cmd->add_option("--report-out", ea.report_out, "summary JSON")->required();
  evaluate_cmd->add_option("--split", ea.split, "test|all (record CSV input)");
  evaluate_cmd->add_option("--name", ea.name, "model label in reports");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "rank evaluated models");
  report->add_option("--summaries", ra.summaries)->required()->expected(1, -1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  report->add_option("--format", ra.format)->check(CLI::IsMember({"text", "csv", "json"}));
  report->add_option("--out", ra.out);
  report->add_option("--chart-out", ra.chart_out, "grouped-bar CSV");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*synth) run_synth(sa);
    else if (*pre) run_preprocess(pa);
    else if (*analyze) run_analyze(aa);
    else if (*features) run_features(fa);
    else if (*train) run_train(ta);
    else if (*evaluate_cmd) run_evaluate(ea);
    else if (*report) run_report(ra);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
