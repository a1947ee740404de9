#ifndef DELAYCAST_MODEL_HPP
#define DELAYCAST_MODEL_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "delaycast/features.hpp"
#include "delaycast/networks.hpp"
#include "delaycast/trainer.hpp"
#include "delaycast/trees.hpp"

namespace delaycast {

enum class ModelKind { Ols, Tree, Forest, Gbt, Mlp, Lstm, BiLstm, Hybrid };
std::string_view to_string(ModelKind kind);
/// Throws DataError listing the valid names.
ModelKind parse_model_kind(std::string_view name);
std::span<const ModelKind> all_model_kinds();
bool is_neural(ModelKind kind);
NetworkKind network_kind(ModelKind kind);

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct ModelOptions {
  TargetMode mode = TargetMode::Components;
  int window = 1;  // neural kinds only
  std::uint64_t seed = 0;
  TreeConfig tree;
  ForestConfig forest;
  GbtConfig gbt;
  TrainConfig train;
  /// Architecture override for neural kinds; window and sizes are then
  /// taken from here.
  std::optional<NetworkConfig> network;
  /// Best-epoch checkpoint file for neural kinds; empty disables.
  std::string checkpoint_path;
};

/// Common fit/predict surface of all estimators. Predictions cover the
/// windows of the table, i.e. rows window()-1 .. n-1.
class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual void fit(const FeatureTable& train) = 0;
  virtual Matrix predict(const FeatureTable& table) const = 0;
  virtual int window() const { return 1; }

  /// Kind-specific settings and the tensors that, together, rebuild the
  /// fitted model through restore().
  virtual nlohmann::json config() const = 0;
  virtual std::vector<NamedTensor> tensors() const = 0;
  virtual void restore(const nlohmann::json& config, std::span<const NamedTensor> tensors) = 0;

  TargetMode mode = TargetMode::Components;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  std::uint64_t seed = 0;
  std::optional<LabelCodebook> codebook;
  nlohmann::json history;  // training log, null for closed-form models

 protected:
  /// Records the table schema at fit time.
  void adopt_schema(const FeatureTable& table);
  /// Throws SchemaError when `table` does not match the fitted schema.
  void check_schema(const FeatureTable& table) const;
};

std::unique_ptr<Model> make_model(ModelKind kind, const ModelOptions& options = {});

/// Targets aligned with predict(): rows window-1 .. n-1 of Y.
Matrix aligned_targets(const FeatureTable& table, int window);

/// Tree <-> tensor form: one row per node, columns
/// [feature, threshold, left, right, value...].
Matrix tree_to_matrix(const Tree& tree);
Tree tree_from_matrix(const Matrix& m, int n_features);

}  // namespace delaycast

#endif  // DELAYCAST_MODEL_HPP
