#include "delaycast/model.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "delaycast/linear.hpp"
#include "delaycast/model_io.hpp"

namespace delaycast {

namespace {

constexpr std::array<ModelKind, 8> kKinds = {ModelKind::Ols,    ModelKind::Tree,
                                             ModelKind::Forest, ModelKind::Gbt,
                                             ModelKind::Mlp,    ModelKind::Lstm,
                                             ModelKind::BiLstm, ModelKind::Hybrid};

std::string join_names(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

const Matrix& find_tensor(std::span<const NamedTensor> tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw ModelFileError("format", "model file lacks tensor '" + name + "'");
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Ols: return "ols";
    case ModelKind::Tree: return "tree";
    case ModelKind::Forest: return "forest";
    case ModelKind::Gbt: return "gbt";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::BiLstm: return "bilstm";
    case ModelKind::Hybrid: return "hybrid";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string valid;
  for (auto k : kKinds) {
    if (to_string(k) == name) return k;
    valid += (valid.empty() ? "" : "|") + std::string(to_string(k));
  }
  throw DataError("unknown model '" + std::string(name) + "', valid: " + valid);
}

std::span<const ModelKind> all_model_kinds() { return kKinds; }

bool is_neural(ModelKind kind) {
  return kind == ModelKind::Mlp || kind == ModelKind::Lstm || kind == ModelKind::BiLstm ||
         kind == ModelKind::Hybrid;
}

NetworkKind network_kind(ModelKind k) {
  switch (k) {
    case ModelKind::Mlp: return NetworkKind::Mlp;
    case ModelKind::Lstm: return NetworkKind::Lstm;
    case ModelKind::BiLstm: return NetworkKind::BiLstm;
    case ModelKind::Hybrid: return NetworkKind::Hybrid;
    default: break;
  }
  throw DataError(std::string(to_string(k)) + " is not a neural model");
}

void Model::adopt_schema(const FeatureTable& table) {
  table.check();
  mode = table.mode;
  feature_names = table.feature_names;
  target_names = table.target_names;
}

void Model::check_schema(const FeatureTable& table) const {
  if (table.mode != mode) {
    throw SchemaError("model predicts " + std::string(to_string(mode)) + " targets, table holds " +
                      std::string(to_string(table.mode)));
  }
  if (table.feature_names != feature_names) {
    throw SchemaError("feature columns differ: model [" + join_names(feature_names) +
                      "], table [" + join_names(table.feature_names) + "]");
  }
  if (table.target_names != target_names) {
    throw SchemaError("target columns differ: model [" + join_names(target_names) +
                      "], table [" + join_names(table.target_names) + "]");
  }
}

Matrix aligned_targets(const FeatureTable& table, int window) {
  const std::size_t count = window_count(table.rows(), window);
  return table.Y.bottomRows(static_cast<Eigen::Index>(count));
}

Matrix tree_to_matrix(const Tree& tree) {
  Matrix m(static_cast<Eigen::Index>(tree.nodes.size()), 4 + tree.n_outputs);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = n.feature;
    m(r, 1) = n.threshold;
    m(r, 2) = n.left;
    m(r, 3) = n.right;
    for (int k = 0; k < tree.n_outputs; ++k)
      m(r, 4 + k) = n.is_leaf() ? n.value[static_cast<std::size_t>(k)] : 0.0;
  }
  return m;
}

Tree tree_from_matrix(const Matrix& m, int n_features) {
  if (m.cols() < 5 || m.rows() < 1) throw ModelFileError("format", "bad tree tensor " + shape_string(m));
  Tree t;
  t.n_features = n_features;
  t.n_outputs = static_cast<int>(m.cols()) - 4;
  const auto n = static_cast<int>(m.rows());
  t.nodes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& node = t.nodes[static_cast<std::size_t>(i)];
    node.feature = static_cast<int>(m(i, 0));
    node.threshold = m(i, 1);
    node.left = static_cast<int>(m(i, 2));
    node.right = static_cast<int>(m(i, 3));
    if (node.is_leaf()) {
      node.value.resize(static_cast<std::size_t>(t.n_outputs));
      for (int k = 0; k < t.n_outputs; ++k) node.value[static_cast<std::size_t>(k)] = m(i, 4 + k);
    } else if (node.feature >= n_features || node.left <= i || node.right <= i ||
               node.left >= n || node.right >= n) {
      throw ModelFileError("format", "tree node " + std::to_string(i) + " is malformed");
    }
  }
  return t;
}

namespace {

// --- ordinary least squares ---------------------------------------------------

class OlsModel final : public Model {
 public:
  ModelKind kind() const override { return ModelKind::Ols; }

  void fit(const FeatureTable& train) override {
    adopt_schema(train);
    // constant or collinear columns (e.g. a single YEAR) are dropped
    const auto dependent = dependent_columns(train.X);
    kept_.clear();
    for (int j = 0; j < static_cast<int>(train.X.cols()); ++j)
      if (std::find(dependent.begin(), dependent.end(), j + 1) == dependent.end())
        kept_.push_back(j);
    model_ = fit_linear(select(train.X), train.Y);
  }

  Matrix predict(const FeatureTable& table) const override {
    check_schema(table);
    return predict_linear(model_, select(table.X));
  }

  nlohmann::json config() const override { return {{"kept_columns", kept_}}; }
  std::vector<NamedTensor> tensors() const override { return {{"beta", model_.beta}}; }
  void restore(const nlohmann::json& config, std::span<const NamedTensor> t) override {
    kept_ = config.at("kept_columns").get<std::vector<int>>();
    model_.beta = find_tensor(t, "beta");
    if (model_.beta.rows() != static_cast<Eigen::Index>(kept_.size()) + 1)
      throw ModelFileError("format", "beta does not match kept columns");
  }

 private:
  Matrix select(const Matrix& X) const {
    Matrix out(X.rows(), static_cast<Eigen::Index>(kept_.size()));
    for (std::size_t j = 0; j < kept_.size(); ++j)
      out.col(static_cast<Eigen::Index>(j)) = X.col(kept_[j]);
    return out;
  }

  std::vector<int> kept_;
  LinearModel model_;
};

// --- single tree ---------------------------------------------------------------

class TreeModel final : public Model {
 public:
  explicit TreeModel(const TreeConfig& c) : config_(c) {}
  ModelKind kind() const override { return ModelKind::Tree; }

  void fit(const FeatureTable& train) override {
    adopt_schema(train);
    tree_ = tree_fit(train.X, train.Y, config_);
  }
  Matrix predict(const FeatureTable& table) const override {
    check_schema(table);
    return tree_predict(tree_, table.X);
  }
  nlohmann::json config() const override {
    return {{"max_depth", config_.max_depth},
            {"min_samples_leaf", config_.min_samples_leaf},
            {"n_features", tree_.n_features}};
  }
  std::vector<NamedTensor> tensors() const override { return {{"tree", tree_to_matrix(tree_)}}; }
  void restore(const nlohmann::json& c, std::span<const NamedTensor> t) override {
    config_.max_depth = c.at("max_depth").get<int>();
    config_.min_samples_leaf = c.at("min_samples_leaf").get<int>();
    tree_ = tree_from_matrix(find_tensor(t, "tree"), c.at("n_features").get<int>());
  }

 private:
  TreeConfig config_;
  Tree tree_;
};

// --- random forest ---------------------------------------------------------------

class ForestWrapper final : public Model {
 public:
  explicit ForestWrapper(const ForestConfig& c) { model_.config = c; }
  ModelKind kind() const override { return ModelKind::Forest; }

  void fit(const FeatureTable& train) override {
    adopt_schema(train);
    model_ = forest_fit(train.X, train.Y, model_.config);
  }
  Matrix predict(const FeatureTable& table) const override {
    check_schema(table);
    return forest_predict(model_, table.X);
  }
  nlohmann::json config() const override {
    const auto& c = model_.config;
    return {{"n_estimators", c.n_estimators}, {"max_depth", c.max_depth},
            {"min_samples_leaf", c.min_samples_leaf}, {"bootstrap", c.bootstrap},
            {"seed", c.seed}, {"train_rows", model_.train_rows},
            {"n_features", model_.trees.empty() ? 0 : model_.trees.front().n_features}};
  }
  std::vector<NamedTensor> tensors() const override {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < model_.trees.size(); ++i)
      out.push_back({"tree." + std::to_string(i), tree_to_matrix(model_.trees[i])});
    return out;
  }
  void restore(const nlohmann::json& c, std::span<const NamedTensor> t) override {
    auto& cfg = model_.config;
    cfg.n_estimators = c.at("n_estimators").get<int>();
    cfg.max_depth = c.at("max_depth").get<int>();
    cfg.min_samples_leaf = c.at("min_samples_leaf").get<int>();
    cfg.bootstrap = c.at("bootstrap").get<bool>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    model_.train_rows = c.at("train_rows").get<std::size_t>();
    const int nf = c.at("n_features").get<int>();
    model_.trees.clear();
    for (int i = 0; i < cfg.n_estimators; ++i)
      model_.trees.push_back(tree_from_matrix(find_tensor(t, "tree." + std::to_string(i)), nf));
    // bootstrap samples are reproducible from (seed, train_rows)
    model_.bootstrap.clear();
    if (cfg.bootstrap)
      for (int i = 0; i < cfg.n_estimators; ++i)
        model_.bootstrap.push_back(
            bootstrap_indices(cfg.seed, static_cast<std::size_t>(i), model_.train_rows));
  }

 private:
  ForestModel model_;
};

// --- gradient boosting ---------------------------------------------------------------

class GbtWrapper final : public Model {
 public:
  explicit GbtWrapper(const GbtConfig& c) { model_.config = c; }
  ModelKind kind() const override { return ModelKind::Gbt; }

  void fit(const FeatureTable& train) override {
    adopt_schema(train);
    model_ = gbt_fit(train.X, train.Y, model_.config);
  }
  Matrix predict(const FeatureTable& table) const override {
    check_schema(table);
    return gbt_predict(model_, table.X);
  }
  nlohmann::json config() const override {
    const auto& c = model_.config;
    int nf = 0;
    if (!model_.chains.empty() && !model_.chains.front().empty())
      nf = model_.chains.front().front().n_features;
    return {{"rounds", c.rounds}, {"eta", c.eta}, {"max_depth", c.max_depth},
            {"lambda", c.lambda}, {"gamma", c.gamma}, {"min_samples_leaf", c.min_samples_leaf},
            {"targets", model_.chains.size()}, {"n_features", nf}};
  }
  std::vector<NamedTensor> tensors() const override {
    std::vector<NamedTensor> out;
    const auto k = static_cast<Eigen::Index>(model_.base_score.size());
    out.push_back({"base_score", Eigen::Map<const Matrix>(model_.base_score.data(), 1, k)});
    const auto r = static_cast<Eigen::Index>(model_.train_mse.size());
    out.push_back({"train_mse", Eigen::Map<const Matrix>(model_.train_mse.data(), 1, r)});
    for (std::size_t t = 0; t < model_.chains.size(); ++t)
      for (std::size_t i = 0; i < model_.chains[t].size(); ++i)
        out.push_back({"tree." + std::to_string(t) + "." + std::to_string(i),
                       tree_to_matrix(model_.chains[t][i])});
    return out;
  }
  void restore(const nlohmann::json& c, std::span<const NamedTensor> t) override {
    auto& cfg = model_.config;
    cfg.rounds = c.at("rounds").get<int>();
    cfg.eta = c.at("eta").get<double>();
    cfg.max_depth = c.at("max_depth").get<int>();
    cfg.lambda = c.at("lambda").get<double>();
    cfg.gamma = c.at("gamma").get<double>();
    cfg.min_samples_leaf = c.at("min_samples_leaf").get<int>();
    const auto targets = c.at("targets").get<std::size_t>();
    const int nf = c.at("n_features").get<int>();
    const Matrix& base = find_tensor(t, "base_score");
    model_.base_score.assign(base.data(), base.data() + base.size());
    const Matrix& tm = find_tensor(t, "train_mse");
    model_.train_mse.assign(tm.data(), tm.data() + tm.size());
    model_.chains.assign(targets, {});
    for (std::size_t j = 0; j < targets; ++j)
      for (int i = 0; i < cfg.rounds; ++i)
        model_.chains[j].push_back(tree_from_matrix(
            find_tensor(t, "tree." + std::to_string(j) + "." + std::to_string(i)), nf));
  }

 private:
  GbtModel model_;
};

// --- neural networks ---------------------------------------------------------------

std::vector<int> all_columns(Eigen::Index n) {
  std::vector<int> c(static_cast<std::size_t>(n));
  for (int j = 0; j < static_cast<int>(n); ++j) c[static_cast<std::size_t>(j)] = j;
  return c;
}

// Inputs are z-scored and targets scaled on the training rows; both
// scalers travel with the model so predictions come back in minutes.
class NeuralModel final : public Model {
 public:
  NeuralModel(ModelKind kind, const ModelOptions& o)
      : kind_(kind), options_(o), train_(o.train) {
    net_config_ = o.network ? *o.network : network_config(network_kind(kind), 1, o.window);
    net_config_.kind = network_kind(kind);
  }
  ModelKind kind() const override { return kind_; }
  int window() const override { return net_config_.window; }

  void fit(const FeatureTable& train) override {
    adopt_schema(train);
    net_config_.inputs = static_cast<int>(train.X.cols());
    net_config_.outputs = static_cast<int>(train.Y.cols());
    x_scaler_ = Standardizer::fit(train.X, all_columns(train.X.cols()), ZeroVariance::CenterOnly);
    y_scaler_ = Standardizer::fit(train.Y, all_columns(train.Y.cols()), ZeroVariance::CenterOnly);
    net_ = Network(net_config_);
    net_.init(seed);
    train_.seed = seed;
    CheckpointFn on_improve;
    if (!options_.checkpoint_path.empty()) {
      on_improve = [this](const EpochRecord& e) {
        save_model(*this, options_.checkpoint_path,
                   CheckpointInfo{e.epoch, {{"val_mse", e.val_mse}, {"val_mae", e.val_mae},
                                            {"train_mse", e.train_mse}}});
      };
    }
    const auto h = train_network(net_, x_scaler_.apply(train.X), y_scaler_.apply(train.Y), train_,
                                 &y_scaler_, on_improve);
    history = h.to_json();
  }

  Matrix predict(const FeatureTable& table) const override {
    check_schema(table);
    Network net = net_;  // forward passes cache activations
    return y_scaler_.invert(predict_windows(net, x_scaler_.apply(table.X)));
  }

  nlohmann::json config() const override {
    return {{"network", net_config_.to_json()}, {"train", train_.to_json()}};
  }
  std::vector<NamedTensor> tensors() const override {
    std::vector<NamedTensor> out;
    Network net = net_;
    for (const auto& p : net.params()) out.push_back({p.name, *p.value});
    out.push_back({"input_scaler", x_scaler_.to_matrix()});
    out.push_back({"target_scaler", y_scaler_.to_matrix()});
    return out;
  }
  void restore(const nlohmann::json& c, std::span<const NamedTensor> t) override {
    net_config_ = NetworkConfig::from_json(c.at("network"));
    train_ = TrainConfig::from_json(c.at("train"));
    net_ = Network(net_config_);
    for (auto& p : net_.params()) {
      const Matrix& v = find_tensor(t, p.name);
      if (v.rows() != p.value->rows() || v.cols() != p.value->cols())
        throw ModelFileError("format", "tensor '" + p.name + "' has shape " + shape_string(v) +
                                           ", expected " + shape_string(*p.value));
      *p.value = v;
    }
    x_scaler_ = Standardizer::from_matrix(find_tensor(t, "input_scaler"));
    y_scaler_ = Standardizer::from_matrix(find_tensor(t, "target_scaler"));
  }

 private:
  ModelKind kind_;
  ModelOptions options_;
  TrainConfig train_;
  NetworkConfig net_config_;
  Network net_;
  Standardizer x_scaler_, y_scaler_;
};

}  // namespace

std::unique_ptr<Model> make_model(ModelKind kind, const ModelOptions& options) {
  std::unique_ptr<Model> m;
  switch (kind) {
    case ModelKind::Ols: m = std::make_unique<OlsModel>(); break;
    case ModelKind::Tree: m = std::make_unique<TreeModel>(options.tree); break;
    case ModelKind::Forest: {
      ForestConfig c = options.forest;
      c.seed = options.seed;
      m = std::make_unique<ForestWrapper>(c);
      break;
    }
    case ModelKind::Gbt: m = std::make_unique<GbtWrapper>(options.gbt); break;
    default: m = std::make_unique<NeuralModel>(kind, options); break;
  }
  m->mode = options.mode;
  m->seed = options.seed;
  return m;
}

}  // namespace delaycast
