#ifndef DELAYCAST_TREES_HPP
#define DELAYCAST_TREES_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "delaycast/numerics.hpp"

namespace delaycast {

/// Binary regression tree stored as a preorder node list, root first.
struct Tree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> value;  // leaf output, one entry per target

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;
  int n_features = 0;
  int n_outputs = 0;

  /// Index of the leaf reached by `x`. Routing sends x[f] <= threshold left.
  int leaf_index(const double* x) const;
  Matrix predict(const Matrix& X) const;
  int depth() const;
  std::size_t leaf_count() const;
  bool operator==(const Tree&) const = default;
};

inline constexpr int kUnlimitedDepth = std::numeric_limits<int>::max();

struct TreeConfig {
  int max_depth = 10;
  int min_samples_leaf = 5;
};

/// Greedy CART regression tree. Each split maximizes the summed per-target
/// reduction in squared error over midpoints of consecutive distinct feature
/// values; ties go to the lowest feature index, then the lowest threshold.
Tree tree_fit(const Matrix& X, const Matrix& Y, const TreeConfig& config = {});
Matrix tree_predict(const Tree& tree, const Matrix& X);

struct ForestConfig {
  int n_estimators = 100;
  int max_depth = 20;
  int min_samples_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct ForestModel {
  ForestConfig config;
  std::size_t train_rows = 0;
  std::vector<Tree> trees;
  /// Bootstrap sample of each tree, reproducible from (seed, train_rows).
  std::vector<std::vector<std::uint32_t>> bootstrap;
};

std::vector<std::uint32_t> bootstrap_indices(std::uint64_t seed, std::size_t tree,
                                             std::size_t n);
ForestModel forest_fit(const Matrix& X, const Matrix& Y, const ForestConfig& config = {});
/// Arithmetic mean of the member trees' predictions.
Matrix forest_predict(const ForestModel& model, const Matrix& X);

/// Optimal leaf weight -G / (H + lambda) of the regularized objective.
double gbt_leaf_weight(double grad_sum, double hess_sum, double lambda);
/// Split gain 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double gbt_split_gain(double grad_left, double hess_left, double grad_right,
                      double hess_right, double lambda, double gamma);

struct GbtConfig {
  int rounds = 100;
  double eta = 0.3;
  int max_depth = 6;
  double lambda = 1.0;
  double gamma = 0.0;
  int min_samples_leaf = 1;
};

/// Squared-error gradient boosting, one independent chain per target. Leaf
/// values hold the unscaled weights; predictions add eta times their sum to
/// the base score.
struct GbtModel {
  GbtConfig config;
  std::vector<double> base_score;          // per target
  std::vector<std::vector<Tree>> chains;   // [target][round]
  std::vector<double> train_mse;           // after each round, all targets
};

GbtModel gbt_fit(const Matrix& X, const Matrix& Y, const GbtConfig& config = {});
/// base + eta * sum_k f_k(x).
Matrix gbt_predict(const GbtModel& model, const Matrix& X);
/// Predictions after every round, accumulated one tree at a time.
std::vector<Matrix> gbt_staged_predict(const GbtModel& model, const Matrix& X);

}  // namespace delaycast

#endif  // DELAYCAST_TREES_HPP
