#ifndef DELAYCAST_NETWORKS_HPP
#define DELAYCAST_NETWORKS_HPP

#include <cstdint>
#include <span>
#include <string_view>

#include "json.hpp"

#include "delaycast/layers.hpp"

namespace delaycast {

enum class NetworkKind { Mlp, Lstm, BiLstm, Hybrid };
std::string_view to_string(NetworkKind kind);

struct NetworkConfig {
  NetworkKind kind = NetworkKind::Mlp;
  int inputs = 11;
  int outputs = 5;
  // feed-forward
  int hidden1 = 64;
  int hidden2 = 32;
  // recurrent
  int units = 11;
  int dense = 64;
  // hybrid CNN path
  int filters = 64;
  int kernel = 3;
  int pool = 2;
  // sequence length the network is built for
  int window = 1;

  nlohmann::json to_json() const;
  static NetworkConfig from_json(const nlohmann::json& j);
  /// Shortest sequence the architecture accepts.
  int min_window() const;
};

/// Default architecture of each kind.
NetworkConfig network_config(NetworkKind kind, int outputs, int window = 1, int inputs = 11);

/// One of the four architectures over time-major input. The feed-forward
/// net reads only the last step of each window.
///
///   mlp:    Dense(64, relu) -> Dense(32, relu) -> Dense(k)
///   lstm:   LSTM(u, seq) -> LSTM(u) -> Dense(64, relu) -> Dense(k)
///   bilstm: BiLSTM(u, seq) -> BiLSTM(u) -> Dense(64, relu) -> Dense(k)
///   hybrid: [Conv1D(64, 3, relu) -> MaxPool(2) -> Flatten -> Dense(64, relu)]
///           ++ [BiLSTM(u, seq) -> LSTM(u) -> Dense(64, relu)] -> Dense(k)
class Network {
 public:
  Network() = default;
  explicit Network(const NetworkConfig& config);

  /// Glorot weights, zero biases, forget-gate bias 1.
  void init(std::uint64_t seed);
  Matrix forward(const Sequence& x);
  /// Backpropagates dLoss/dOutput of the last forward call; gradients
  /// accumulate until zero_grad.
  void backward(const Matrix& grad_out);
  void zero_grad();

  ParamList params();
  std::size_t parameter_count();
  bool recurrent() const { return config_.kind != NetworkKind::Mlp; }
  const NetworkConfig& config() const { return config_; }

 private:
  NetworkConfig config_;
  DenseLayer d1_, d2_, out_;
  // recurrent stacks; the unused ones stay empty
  LstmLayer l1_, l2_;
  BidirectionalLstm b1_, b2_;
  Conv1D conv_;
  MaxPool1D pool_;
  DenseLayer cnn_dense_;
  std::size_t steps_ = 0;
  std::size_t pooled_steps_ = 0;
};

/// Sliding windows over consecutive rows: window s covers rows
/// [s, s + T) and its target is row s + T - 1.
struct SequenceBatch {
  Sequence inputs;  // T matrices of count x features
  Matrix targets;   // count x k
  std::size_t count() const { return static_cast<std::size_t>(targets.rows()); }
};

std::size_t window_count(std::size_t rows, int window);
SequenceBatch make_sequences(const Matrix& X, const Matrix& Y, int window);
/// Time-major inputs of the windows starting at `starts`.
Sequence gather_windows(const Matrix& X, std::span<const std::size_t> starts, int window);

}  // namespace delaycast

#endif  // DELAYCAST_NETWORKS_HPP
