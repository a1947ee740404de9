#include "delaycast/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace delaycast {

void TrainConfig::validate() const {
  std::string problems;
  auto note = [&](const std::string& p) {
    if (!problems.empty()) problems += "; ";
    problems += p;
  };
  if (epochs < 1) note("epochs must be >= 1");
  if (batch_size < 1) note("batch_size must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    note("validation_fraction must be in [0, 1)");
  if (patience < 1) note("patience must be >= 1");
  if (clip_norm && !(*clip_norm > 0.0)) note("clip_norm must be > 0");
  if (!(adam.learning_rate > 0.0)) note("learning_rate must be > 0");
  if (!problems.empty()) throw DataError(problems);
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = {{"epochs", epochs},
                      {"batch_size", batch_size},
                      {"validation_fraction", validation_fraction},
                      {"patience", patience},
                      {"shuffle", shuffle},
                      {"seed", seed},
                      {"learning_rate", adam.learning_rate},
                      {"beta1", adam.beta1},
                      {"beta2", adam.beta2},
                      {"epsilon", adam.epsilon}};
  j["clip_norm"] = clip_norm ? nlohmann::json(*clip_norm) : nlohmann::json(nullptr);
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.patience = j.value("patience", c.patience);
  c.shuffle = j.value("shuffle", c.shuffle);
  c.seed = j.value("seed", c.seed);
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
  if (j.contains("clip_norm")) {
    c.clip_norm = j["clip_norm"].is_null() ? std::nullopt
                                           : std::optional<double>(j["clip_norm"].get<double>());
  }
  return c;
}

nlohmann::json TrainHistory::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"train_mse", e.train_mse},
                    {"train_mae", e.train_mae},
                    {"val_mse", e.val_mse},
                    {"val_mae", e.val_mae},
                    {"improved", e.improved}});
  }
  return {{"epochs", rows},
          {"best_epoch", best_epoch},
          {"best_val_mse", best_val_mse},
          {"stopped_early", stopped_early}};
}

bool EarlyStopping::update(double loss) {
  ++epoch_;
  if (epoch_ == 1 || loss < best_) {
    best_ = loss;
    best_epoch_ = epoch_;
    bad_epochs_ = 0;
    last_improved_ = true;
    return false;
  }
  last_improved_ = false;
  return ++bad_epochs_ >= patience_;
}

namespace {

std::vector<Matrix> snapshot(const ParamList& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(*p.value);
  return out;
}

void restore(const ParamList& params, const std::vector<Matrix>& saved) {
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = saved[i];
}

Matrix predict_starts(Network& net, const Matrix& X, std::size_t first, std::size_t count,
                      int batch) {
  const int T = net.config().window;
  Matrix out(static_cast<Eigen::Index>(count), net.config().outputs);
  std::vector<std::size_t> starts;
  for (std::size_t b = 0; b < count; b += static_cast<std::size_t>(batch)) {
    const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(batch), count - b);
    starts.resize(len);
    std::iota(starts.begin(), starts.end(), first + b);
    out.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(len)) =
        net.forward(gather_windows(X, starts, T));
  }
  return out;
}

}  // namespace

Matrix predict_windows(Network& net, const Matrix& X, int batch) {
  const std::size_t count =
      window_count(static_cast<std::size_t>(X.rows()), net.config().window);
  return predict_starts(net, X, 0, count, batch);
}

TrainHistory train_network(Network& net, const Matrix& X, const Matrix& Y,
                           const TrainConfig& config, const Standardizer* target_scaler,
                           const CheckpointFn& on_improve) {
  config.validate();
  if (X.rows() != Y.rows()) {
    throw ShapeError("train: X " + shape_string(X) + " vs Y " + shape_string(Y));
  }
  if (Y.cols() != net.config().outputs) {
    throw ShapeError("train: Y has " + std::to_string(Y.cols()) + " columns, network emits " +
                     std::to_string(net.config().outputs));
  }
  const int T = net.config().window;
  const std::size_t windows = window_count(static_cast<std::size_t>(X.rows()), T);
  const auto n_val =
      static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(windows)));
  const std::size_t n_train = windows - n_val;
  if (n_train == 0) throw DataError("train: no training windows left after validation split");

  // target row of window s is s + T - 1
  auto targets = [&](std::size_t first, std::size_t count) {
    return Matrix(Y.middleRows(static_cast<Eigen::Index>(first) + T - 1,
                               static_cast<Eigen::Index>(count)));
  };
  auto to_original = [&](const Matrix& m) {
    return target_scaler ? target_scaler->invert(m) : m;
  };

  ParamList params = net.params();
  std::vector<Matrix*> values, grads;
  for (const auto& p : params) {
    values.push_back(p.value);
    grads.push_back(p.grad);
  }
  std::vector<const Matrix*> cgrads(grads.begin(), grads.end());
  AdamState<double> adam;
  adam.config = config.adam;

  const std::size_t B = static_cast<std::size_t>(config.batch_size);
  const std::size_t n_batches = (n_train + B - 1) / B;
  std::vector<std::size_t> order(n_batches);
  std::vector<std::size_t> starts;

  EarlyStopping stopper(config.patience);
  TrainHistory history;
  std::vector<Matrix> best = snapshot(params);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle) {
      Rng rng = Rng(config.seed).substream(static_cast<std::uint64_t>(epoch));
      for (std::size_t i = n_batches; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    double sse = 0.0, sae = 0.0;
    for (std::size_t bi : order) {
      const std::size_t first = bi * B;
      const std::size_t len = std::min(B, n_train - first);
      starts.resize(len);
      std::iota(starts.begin(), starts.end(), first);
      const Matrix y = targets(first, len);
      net.zero_grad();
      const Matrix pred = net.forward(gather_windows(X, starts, T));
      const Matrix diff = pred - y;
      const double batch_sse = diff.squaredNorm();
      if (!std::isfinite(batch_sse)) {
        restore(params, best);
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      }
      sse += batch_sse;
      sae += diff.cwiseAbs().sum();
      net.backward(diff * (2.0 / static_cast<double>(diff.size())));
      if (net.recurrent() && config.clip_norm) clip_global_norm<double>(grads, *config.clip_norm);
      adam_step<double>(values, cgrads, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double entries = static_cast<double>(n_train) * static_cast<double>(Y.cols());
    rec.train_mse = sse / entries;
    rec.train_mae = sae / entries;
    if (n_val > 0) {
      const Matrix pred = to_original(predict_starts(net, X, n_train, n_val, 1024));
      const Matrix truth = to_original(targets(n_train, n_val));
      rec.val_mse = mse(pred, truth);
      rec.val_mae = mae(pred, truth);
    } else {
      rec.val_mse = rec.train_mse;
      rec.val_mae = rec.train_mae;
    }
    if (!std::isfinite(rec.val_mse)) {
      restore(params, best);
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    const bool stop = stopper.update(rec.val_mse);
    rec.improved = stopper.last_improved();
    history.epochs.push_back(rec);
    if (rec.improved) {
      best = snapshot(params);
      if (on_improve) on_improve(rec);
    }
    if (stop) {
      history.stopped_early = epoch < config.epochs;
      break;
    }
  }
  restore(params, best);
  history.best_epoch = stopper.best_epoch();
  history.best_val_mse = stopper.best();
  return history;
}

}  // namespace delaycast
