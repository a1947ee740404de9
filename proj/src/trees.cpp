#include "delaycast/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace delaycast {

int Tree::leaf_index(const double* x) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

Matrix Tree::predict(const Matrix& X) const {
  if (X.cols() != n_features) {
    throw ShapeError("tree predict: X " + shape_string(X) + " but tree expects " +
                     std::to_string(n_features) + " features");
  }
  if (nodes.empty()) throw DataError("tree predict: empty tree");
  Matrix out(X.rows(), n_outputs);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto& leaf = nodes[static_cast<std::size_t>(leaf_index(X.row(i).data()))];
    for (int k = 0; k < n_outputs; ++k) out(i, k) = leaf.value[static_cast<std::size_t>(k)];
  }
  return out;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
}

Matrix tree_predict(const Tree& tree, const Matrix& X) { return tree.predict(X); }

namespace {

constexpr double kGainTolerance = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Greedy top-down builder over presorted per-feature row orders. Each node
// owns the segment [begin, end) of every order array; splitting stably
// partitions the segments so children stay sorted.
template <typename Criterion>
class Builder {
 public:
  Builder(const Matrix& X, Criterion& criterion, int max_depth, int min_leaf)
      : X_(X), crit_(criterion), max_depth_(max_depth), min_leaf_(std::max(1, min_leaf)) {
    const auto n = static_cast<std::size_t>(X.rows());
    order_.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
      auto& ord = order_[static_cast<std::size_t>(f)];
      ord.resize(n);
      std::iota(ord.begin(), ord.end(), 0);
      std::sort(ord.begin(), ord.end(), [&](int a, int b) {
        const double xa = X(a, f), xb = X(b, f);
        return xa < xb || (xa == xb && a < b);
      });
    }
    goes_left_.assign(n, 0);
    rows_.resize(n);
    std::iota(rows_.begin(), rows_.end(), 0);
  }

  Tree build() {
    Tree tree;
    tree.n_features = static_cast<int>(X_.cols());
    tree.n_outputs = crit_.outputs();
    grow(tree, 0, rows_.size(), 0);
    return tree;
  }

 private:
  int grow(Tree& tree, std::size_t begin, std::size_t end, int depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::span<const int> rows(rows_.data() + begin, end - begin);
    crit_.begin_node(rows);
    const auto n = static_cast<long>(end - begin);

    Split best;
    const bool can_split = depth < max_depth_ && n >= 2L * min_leaf_ && !crit_.pure(rows);
    if (can_split) best = find_split(begin, end);
    if (best.feature < 0) {
      tree.nodes[static_cast<std::size_t>(index)].value = crit_.leaf_value();
      return index;
    }

    const auto& ord = order_[static_cast<std::size_t>(best.feature)];
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const bool left = X_(ord[i], best.feature) <= best.threshold;
      goes_left_[static_cast<std::size_t>(ord[i])] = left;
      n_left += left;
    }
    auto is_left = [&](int r) { return goes_left_[static_cast<std::size_t>(r)] != 0; };
    for (auto& o : order_) {
      std::stable_partition(o.begin() + static_cast<std::ptrdiff_t>(begin),
                            o.begin() + static_cast<std::ptrdiff_t>(end), is_left);
    }
    std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                          rows_.begin() + static_cast<std::ptrdiff_t>(end), is_left);

    tree.nodes[static_cast<std::size_t>(index)].feature = best.feature;
    tree.nodes[static_cast<std::size_t>(index)].threshold = best.threshold;
    const int left = grow(tree, begin, begin + n_left, depth + 1);
    const int right = grow(tree, begin + n_left, end, depth + 1);
    tree.nodes[static_cast<std::size_t>(index)].left = left;
    tree.nodes[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  Split find_split(std::size_t begin, std::size_t end) {
    Split best;
    const double floor = crit_.gain_floor();
    const std::size_t n = end - begin;
    for (Eigen::Index f = 0; f < X_.cols(); ++f) {
      const auto& ord = order_[static_cast<std::size_t>(f)];
      crit_.reset_left();
      for (std::size_t i = begin; i + 1 < end; ++i) {
        crit_.add_left(ord[i]);
        const std::size_t n_left = i + 1 - begin;
        const double x_here = X_(ord[i], f);
        const double x_next = X_(ord[i + 1], f);
        if (x_here == x_next) continue;
        if (n_left < static_cast<std::size_t>(min_leaf_) ||
            n - n_left < static_cast<std::size_t>(min_leaf_)) {
          continue;
        }
        const double gain = crit_.gain(n_left, n - n_left);
        if (gain > floor && (best.feature < 0 || gain > best.gain)) {
          double threshold = 0.5 * (x_here + x_next);
          if (!(threshold < x_next)) threshold = x_here;
          best = {static_cast<int>(f), threshold, gain};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  Criterion& crit_;
  int max_depth_;
  int min_leaf_;
  std::vector<std::vector<int>> order_;
  std::vector<int> rows_;
  std::vector<char> goes_left_;
};

// Summed squared-error reduction over all targets.
class VarianceCriterion {
 public:
  explicit VarianceCriterion(const Matrix& Y)
      : Y_(Y), k_(static_cast<std::size_t>(Y.cols())), total_(k_), left_(k_) {}

  int outputs() const { return static_cast<int>(k_); }

  void begin_node(std::span<const int> rows) {
    n_ = rows.size();
    std::fill(total_.begin(), total_.end(), 0.0);
    for (int r : rows)
      for (std::size_t t = 0; t < k_; ++t) total_[t] += Y_(r, static_cast<Eigen::Index>(t));
    parent_term_ = 0.0;
    sse_ = 0.0;
    for (std::size_t t = 0; t < k_; ++t) {
      parent_term_ += total_[t] * total_[t] / static_cast<double>(n_);
      const double mean = total_[t] / static_cast<double>(n_);
      for (int r : rows) {
        const double d = Y_(r, static_cast<Eigen::Index>(t)) - mean;
        sse_ += d * d;
      }
    }
  }

  bool pure(std::span<const int> rows) const {
    for (int r : rows) {
      if (Y_.row(r) != Y_.row(rows.front())) return false;
    }
    return true;
  }

  double gain_floor() const { return kGainTolerance * sse_; }

  void reset_left() { std::fill(left_.begin(), left_.end(), 0.0); }
  void add_left(int r) {
    for (std::size_t t = 0; t < k_; ++t) left_[t] += Y_(r, static_cast<Eigen::Index>(t));
  }
  double gain(std::size_t n_left, std::size_t n_right) const {
    double g = 0.0;
    for (std::size_t t = 0; t < k_; ++t) {
      const double right = total_[t] - left_[t];
      g += left_[t] * left_[t] / static_cast<double>(n_left) +
           right * right / static_cast<double>(n_right);
    }
    return g - parent_term_;
  }

  std::vector<double> leaf_value() const {
    std::vector<double> v(k_);
    for (std::size_t t = 0; t < k_; ++t) v[t] = total_[t] / static_cast<double>(n_);
    return v;
  }

 private:
  const Matrix& Y_;
  std::size_t k_;
  std::size_t n_ = 0;
  std::vector<double> total_;
  std::vector<double> left_;
  double parent_term_ = 0.0;
  double sse_ = 0.0;
};

// Second-order boosting objective for one target.
class BoostCriterion {
 public:
  BoostCriterion(const std::vector<double>& grad, const std::vector<double>& hess,
                 double lambda, double gamma)
      : g_(grad), h_(hess), lambda_(lambda), gamma_(gamma) {}

  int outputs() const { return 1; }

  void begin_node(std::span<const int> rows) {
    G_ = 0.0;
    H_ = 0.0;
    for (int r : rows) {
      G_ += g_[static_cast<std::size_t>(r)];
      H_ += h_[static_cast<std::size_t>(r)];
    }
  }

  bool pure(std::span<const int> rows) const {
    for (int r : rows) {
      if (g_[static_cast<std::size_t>(r)] != g_[static_cast<std::size_t>(rows.front())]) {
        return false;
      }
    }
    return true;
  }

  double gain_floor() const {
    return kGainTolerance * G_ * G_ / (H_ + lambda_);
  }

  void reset_left() {
    GL_ = 0.0;
    HL_ = 0.0;
  }
  void add_left(int r) {
    GL_ += g_[static_cast<std::size_t>(r)];
    HL_ += h_[static_cast<std::size_t>(r)];
  }
  double gain(std::size_t, std::size_t) const {
    return gbt_split_gain(GL_, HL_, G_ - GL_, H_ - HL_, lambda_, gamma_);
  }

  std::vector<double> leaf_value() const { return {gbt_leaf_weight(G_, H_, lambda_)}; }

 private:
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  double lambda_;
  double gamma_;
  double G_ = 0.0, H_ = 0.0, GL_ = 0.0, HL_ = 0.0;
};

void check_fit_inputs(const char* who, const Matrix& X, const Matrix& Y) {
  if (X.rows() == 0) throw DataError(std::string(who) + ": empty input");
  if (X.rows() != Y.rows()) {
    throw ShapeError(std::string(who) + ": X " + shape_string(X) + " vs Y " + shape_string(Y));
  }
  if (Y.cols() == 0) throw ShapeError(std::string(who) + ": no targets");
}

}  // namespace

Tree tree_fit(const Matrix& X, const Matrix& Y, const TreeConfig& config) {
  check_fit_inputs("tree_fit", X, Y);
  VarianceCriterion crit(Y);
  Builder<VarianceCriterion> builder(X, crit, config.max_depth, config.min_samples_leaf);
  return builder.build();
}

std::vector<std::uint32_t> bootstrap_indices(std::uint64_t seed, std::size_t tree,
                                             std::size_t n) {
  Rng rng = Rng(seed).substream(tree);
  std::vector<std::uint32_t> idx(n);
  for (auto& i : idx) i = static_cast<std::uint32_t>(rng.below(n));
  return idx;
}

ForestModel forest_fit(const Matrix& X, const Matrix& Y, const ForestConfig& config) {
  check_fit_inputs("forest_fit", X, Y);
  if (config.n_estimators < 1) throw DataError("forest_fit: n_estimators must be >= 1");
  ForestModel model;
  model.config = config;
  model.train_rows = static_cast<std::size_t>(X.rows());
  const TreeConfig tree_config{config.max_depth, config.min_samples_leaf};
  for (int t = 0; t < config.n_estimators; ++t) {
    if (!config.bootstrap) {
      model.trees.push_back(tree_fit(X, Y, tree_config));
      continue;
    }
    auto idx = bootstrap_indices(config.seed, static_cast<std::size_t>(t), model.train_rows);
    Matrix Xs(X.rows(), X.cols());
    Matrix Ys(Y.rows(), Y.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Xs.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
      Ys.row(static_cast<Eigen::Index>(i)) = Y.row(idx[i]);
    }
    model.trees.push_back(tree_fit(Xs, Ys, tree_config));
    model.bootstrap.push_back(std::move(idx));
  }
  return model;
}

Matrix forest_predict(const ForestModel& model, const Matrix& X) {
  if (model.trees.empty()) throw DataError("forest_predict: no trees");
  Matrix sum = model.trees.front().predict(X);
  for (std::size_t t = 1; t < model.trees.size(); ++t) sum += model.trees[t].predict(X);
  return sum / static_cast<double>(model.trees.size());
}

double gbt_leaf_weight(double grad_sum, double hess_sum, double lambda) {
  const double denom = hess_sum + lambda;
  if (!(denom > 0.0)) throw DataError("gbt_leaf_weight: H + lambda must be positive");
  return -grad_sum / denom;
}

double gbt_split_gain(double grad_left, double hess_left, double grad_right,
                      double hess_right, double lambda, double gamma) {
  const double dl = hess_left + lambda;
  const double dr = hess_right + lambda;
  const double dp = hess_left + hess_right + lambda;
  if (!(dl > 0.0 && dr > 0.0 && dp > 0.0)) {
    throw DataError("gbt_split_gain: hessian sums plus lambda must be positive");
  }
  const double g = grad_left + grad_right;
  return 0.5 * (grad_left * grad_left / dl + grad_right * grad_right / dr - g * g / dp) -
         gamma;
}

GbtModel gbt_fit(const Matrix& X, const Matrix& Y, const GbtConfig& config) {
  check_fit_inputs("gbt_fit", X, Y);
  if (X.rows() < 2) throw DataError("gbt_fit: need at least two rows");
  if (config.rounds < 0) throw DataError("gbt_fit: rounds must be >= 0");
  if (!(config.eta >= 0.0 && config.eta <= 1.0)) {
    throw DataError("gbt_fit: eta must lie in [0, 1]");
  }
  const auto n = static_cast<std::size_t>(X.rows());
  const auto k = static_cast<std::size_t>(Y.cols());
  GbtModel model;
  model.config = config;
  model.chains.resize(k);

  Matrix pred(X.rows(), Y.cols());
  for (std::size_t t = 0; t < k; ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) mean += Y(i, c);
    mean /= static_cast<double>(n);
    model.base_score.push_back(mean);
    pred.col(c).setConstant(mean);
  }

  std::vector<double> grad(n), hess(n, 1.0);
  for (int round = 0; round < config.rounds; ++round) {
    for (std::size_t t = 0; t < k; ++t) {
      const auto c = static_cast<Eigen::Index>(t);
      for (std::size_t i = 0; i < n; ++i) {
        grad[i] = pred(static_cast<Eigen::Index>(i), c) - Y(static_cast<Eigen::Index>(i), c);
      }
      BoostCriterion crit(grad, hess, config.lambda, config.gamma);
      Builder<BoostCriterion> builder(X, crit, config.max_depth, config.min_samples_leaf);
      Tree tree = builder.build();
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_index(X.row(i).data()))];
        pred(i, c) += config.eta * leaf.value[0];
      }
      model.chains[t].push_back(std::move(tree));
    }
    model.train_mse.push_back(mse(pred, Y));
  }
  return model;
}

Matrix gbt_predict(const GbtModel& model, const Matrix& X) {
  Matrix out(X.rows(), static_cast<Eigen::Index>(model.base_score.size()));
  for (std::size_t t = 0; t < model.base_score.size(); ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    Vector sum = Vector::Zero(X.rows());
    for (const auto& tree : model.chains[t]) sum += tree.predict(X).col(0);
    out.col(c) = (model.base_score[t] + model.config.eta * sum.array()).matrix();
  }
  return out;
}

std::vector<Matrix> gbt_staged_predict(const GbtModel& model, const Matrix& X) {
  const auto k = model.base_score.size();
  Matrix current(X.rows(), static_cast<Eigen::Index>(k));
  for (std::size_t t = 0; t < k; ++t) {
    current.col(static_cast<Eigen::Index>(t)).setConstant(model.base_score[t]);
  }
  std::vector<Matrix> stages;
  const std::size_t rounds = k ? model.chains[0].size() : 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t t = 0; t < k; ++t) {
      current.col(static_cast<Eigen::Index>(t)) +=
          model.config.eta * model.chains[t][r].predict(X).col(0);
    }
    stages.push_back(current);
  }
  return stages;
}

}  // namespace delaycast
