#ifndef DELAYCAST_LAYERS_HPP
#define DELAYCAST_LAYERS_HPP

#include <string>
#include <vector>

#include "delaycast/numerics.hpp"

namespace delaycast {

/// Time-major batch of sequences: one B x features matrix per timestep.
using Sequence = std::vector<Matrix>;

/// A named trainable tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Matrix* value;
  Matrix* grad;
};
using ParamList = std::vector<ParamRef>;

enum class Activation { Identity, Relu };

/// Glorot-uniform fill: U(-sqrt(6 / (fan_in + fan_out)), +...).
void glorot_uniform(Matrix& m, Rng& rng, Eigen::Index fan_in, Eigen::Index fan_out);

class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(int in, int out, Activation act);

  void init(Rng& rng);
  Matrix forward(const Matrix& x);
  /// Accumulates parameter gradients and returns the input gradient.
  Matrix backward(const Matrix& grad_out);
  void collect(ParamList& out, const std::string& prefix);

  int in() const { return static_cast<int>(W.rows()); }
  int out() const { return static_cast<int>(W.cols()); }

  Matrix W, b;
  Matrix dW, db;
  Activation activation = Activation::Identity;

 private:
  Matrix x_;
  Matrix y_;
};

/// Gate blocks are packed along columns in the order input, forget, output,
/// cell candidate.
enum class Gate : int { Input = 0, Forget = 1, Output = 2, Cell = 3 };

struct LstmCellParams {
  Matrix W_x;  // in x 4u
  Matrix W_h;  // u x 4u
  Matrix b;    // 1 x 4u

  LstmCellParams() = default;
  LstmCellParams(int input_size, int units);
  int input_size() const { return static_cast<int>(W_x.rows()); }
  int units() const { return static_cast<int>(W_h.rows()); }
  void set_zero();

  auto input_weights(Gate g) {
    return W_x.middleCols(static_cast<int>(g) * units(), units());
  }
  auto hidden_weights(Gate g) {
    return W_h.middleCols(static_cast<int>(g) * units(), units());
  }
  auto bias(Gate g) { return b.middleCols(static_cast<int>(g) * units(), units()); }
};

struct LstmCellCache {
  Matrix x, h_prev, c_prev;
  Matrix i, f, o, g;
  Matrix c, tanh_c;
};

struct LstmStepResult {
  Matrix h;
  Matrix c;
  LstmCellCache cache;
};

/// i = s(x Wxi + h Whi + bi), f, o likewise, g = tanh(...),
/// c = f . c_prev + i . g, h = o . tanh(c).
LstmStepResult lstm_cell_forward(const Matrix& x, const Matrix& h_prev,
                                 const Matrix& c_prev, const LstmCellParams& p);

struct LstmCellInputGrads {
  Matrix dx;
  Matrix dh_prev;
  Matrix dc_prev;
};

/// Backward through one step. Parameter gradients are added into `grads`.
LstmCellInputGrads lstm_cell_backward(const LstmCellCache& cache, const Matrix& grad_h,
                                      const Matrix& grad_c, const LstmCellParams& p,
                                      LstmCellParams& grads);

/// Unidirectional LSTM over a sequence, zero initial state. With
/// `return_sequences` the output has one entry per step; otherwise only the
/// final hidden state. `reverse` walks the input from the last step back.
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(int input_size, int units, bool return_sequences, bool reverse = false);

  void init(Rng& rng);
  Sequence forward(const Sequence& x);
  Sequence backward(const Sequence& grad_out);
  void collect(ParamList& out, const std::string& prefix);

  int units() const { return params.units(); }
  bool return_sequences() const { return return_sequences_; }

  LstmCellParams params;
  LstmCellParams grads;

 private:
  bool return_sequences_ = true;
  bool reverse_ = false;
  std::vector<LstmCellCache> caches_;  // in processing order
};

/// Forward and reverse LSTMs whose outputs are concatenated per step:
/// [h_fwd, h_bwd]. Without `return_sequences` the output is the forward
/// final state next to the reverse direction's final state.
class BidirectionalLstm {
 public:
  BidirectionalLstm() = default;
  BidirectionalLstm(int input_size, int units, bool return_sequences);

  void init(Rng& rng);
  Sequence forward(const Sequence& x);
  Sequence backward(const Sequence& grad_out);
  void collect(ParamList& out, const std::string& prefix);

  int output_width() const { return 2 * forward_.units(); }

  LstmLayer& forward_layer() { return forward_; }
  LstmLayer& backward_layer() { return backward_; }

 private:
  LstmLayer forward_;
  LstmLayer backward_;
};

/// Valid (unpadded) 1-D cross-correlation with stride 1. W stacks the kernel
/// taps: rows [j*c, (j+1)*c) hold tap j.
class Conv1D {
 public:
  Conv1D() = default;
  Conv1D(int channels, int filters, int kernel, Activation act);

  void init(Rng& rng);
  Sequence forward(const Sequence& x);
  Sequence backward(const Sequence& grad_out);
  void collect(ParamList& out, const std::string& prefix);

  int kernel() const { return kernel_; }
  int filters() const { return static_cast<int>(W.cols()); }

  Matrix W, b;
  Matrix dW, db;
  Activation activation = Activation::Relu;

 private:
  int channels_ = 0;
  int kernel_ = 0;
  std::vector<Matrix> windows_;  // im2col input per output step
  Sequence y_;
};

/// Non-overlapping max pooling over time; a trailing partial window is
/// dropped. Ties route the gradient to the earliest step.
class MaxPool1D {
 public:
  explicit MaxPool1D(int width = 2) : width_(width) {}
  Sequence forward(const Sequence& x);
  Sequence backward(const Sequence& grad_out);
  int width() const { return width_; }

 private:
  int width_;
  std::size_t input_steps_ = 0;
  std::vector<Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> argmax_;
};

/// Concatenates steps along features: B x (T * F), step-major.
Matrix flatten(const Sequence& x);
Sequence unflatten(const Matrix& flat, std::size_t steps);

}  // namespace delaycast

#endif  // DELAYCAST_LAYERS_HPP
