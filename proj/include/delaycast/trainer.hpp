#ifndef DELAYCAST_TRAINER_HPP
#define DELAYCAST_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"

#include "delaycast/features.hpp"
#include "delaycast/networks.hpp"

namespace delaycast {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double validation_fraction = 0.2;
  int patience = 5;
  /// Global-norm clip for recurrent nets; nullopt disables.
  std::optional<double> clip_norm = 1.0;
  bool shuffle = false;  // batch order only; rows stay chronological inside a batch
  std::uint64_t seed = 0;
  AdamConfig adam;

  /// Throws DataError naming every violated bound.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_mse = 0.0;
  double train_mae = 0.0;
  double val_mse = 0.0;  // original target units
  double val_mae = 0.0;
  bool improved = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_mse = 0.0;
  bool stopped_early = false;
  nlohmann::json to_json() const;
};

/// Patience counter on a monitored loss; an epoch counts as an improvement
/// only when it is strictly lower than the best so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}
  /// Records one epoch. Returns true once `patience` epochs in a row failed
  /// to improve.
  bool update(double loss);
  bool last_improved() const { return last_improved_; }
  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int bad_epochs_ = 0;
  double best_ = 0.0;
  bool last_improved_ = false;
};

/// Called after an improving epoch while the network holds that epoch's
/// parameters.
using CheckpointFn = std::function<void(const EpochRecord&)>;

/// Minimizes MSE with Adam over windows of (X, Y). The last
/// validation_fraction of windows is held out; training restores the
/// parameters of the best validation epoch before returning. Validation
/// errors are reported after mapping predictions and targets through
/// `target_scaler.invert` when given. A non-finite loss throws TrainingError
/// and leaves the network at its last good state.
TrainHistory train_network(Network& net, const Matrix& X, const Matrix& Y,
                           const TrainConfig& config,
                           const Standardizer* target_scaler = nullptr,
                           const CheckpointFn& on_improve = {});

/// Forward pass over all windows of X in chunks of `batch` rows.
Matrix predict_windows(Network& net, const Matrix& X, int batch = 1024);

}  // namespace delaycast

#endif  // DELAYCAST_TRAINER_HPP
