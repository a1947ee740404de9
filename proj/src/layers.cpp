#include "delaycast/layers.hpp"

#include <cmath>
#include <string>

namespace delaycast {

namespace {

Matrix sigmoid(const Matrix& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

void apply_activation(Matrix& z, Activation act) {
  if (act == Activation::Relu) z = z.cwiseMax(0.0);
}

// grad w.r.t. pre-activation, given the activated output y.
Matrix activation_backward(const Matrix& grad, const Matrix& y, Activation act) {
  if (act == Activation::Identity) return grad;
  return (y.array() > 0.0).select(grad, 0.0);
}

Matrix zeros_like(const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()); }

}  // namespace

void glorot_uniform(Matrix& m, Rng& rng, Eigen::Index fan_in, Eigen::Index fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  fill_uniform(m, rng, limit);
}

// --- Dense -----------------------------------------------------------------

DenseLayer::DenseLayer(int in, int out, Activation act)
    : W(Matrix::Zero(in, out)),
      b(Matrix::Zero(1, out)),
      dW(Matrix::Zero(in, out)),
      db(Matrix::Zero(1, out)),
      activation(act) {}

void DenseLayer::init(Rng& rng) {
  glorot_uniform(W, rng, W.rows(), W.cols());
  b.setZero();
}

Matrix DenseLayer::forward(const Matrix& x) {
  if (x.cols() != W.rows()) {
    throw ShapeError("dense forward: input " + shape_string(x) + " vs W " + shape_string(W));
  }
  x_ = x;
  Matrix z = x * W;
  z.rowwise() += b.row(0);
  apply_activation(z, activation);
  y_ = z;
  return z;
}

Matrix DenseLayer::backward(const Matrix& grad_out) {
  require_same_shape("dense backward", grad_out, y_);
  const Matrix dz = activation_backward(grad_out, y_, activation);
  dW.noalias() += x_.transpose() * dz;
  db += dz.colwise().sum();
  return dz * W.transpose();
}

void DenseLayer::collect(ParamList& out, const std::string& prefix) {
  out.push_back({prefix + ".W", &W, &dW});
  out.push_back({prefix + ".b", &b, &db});
}

// --- LSTM cell -------------------------------------------------------------

LstmCellParams::LstmCellParams(int input_size, int units)
    : W_x(Matrix::Zero(input_size, 4 * units)),
      W_h(Matrix::Zero(units, 4 * units)),
      b(Matrix::Zero(1, 4 * units)) {}

void LstmCellParams::set_zero() {
  W_x.setZero();
  W_h.setZero();
  b.setZero();
}

LstmStepResult lstm_cell_forward(const Matrix& x, const Matrix& h_prev,
                                 const Matrix& c_prev, const LstmCellParams& p) {
  const int u = p.units();
  if (x.cols() != p.W_x.rows() || h_prev.cols() != u || c_prev.cols() != u ||
      h_prev.rows() != x.rows() || c_prev.rows() != x.rows()) {
    throw ShapeError("lstm_cell_forward: x " + shape_string(x) + ", h " +
                     shape_string(h_prev) + ", c " + shape_string(c_prev) + " vs W_x " +
                     shape_string(p.W_x));
  }
  Matrix z = x * p.W_x;
  z.noalias() += h_prev * p.W_h;
  z.rowwise() += p.b.row(0);

  LstmStepResult r;
  auto& cache = r.cache;
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.i = sigmoid(z.middleCols(0, u));
  cache.f = sigmoid(z.middleCols(u, u));
  cache.o = sigmoid(z.middleCols(2 * u, u));
  cache.g = z.middleCols(3 * u, u).array().tanh().matrix();
  cache.c = (cache.f.array() * c_prev.array() + cache.i.array() * cache.g.array()).matrix();
  cache.tanh_c = cache.c.array().tanh().matrix();
  r.c = cache.c;
  r.h = (cache.o.array() * cache.tanh_c.array()).matrix();
  return r;
}

LstmCellInputGrads lstm_cell_backward(const LstmCellCache& cache, const Matrix& grad_h,
                                      const Matrix& grad_c, const LstmCellParams& p,
                                      LstmCellParams& grads) {
  require_same_shape("lstm_cell_backward", grad_h, cache.c);
  require_same_shape("lstm_cell_backward", grad_c, cache.c);
  if (cache.x.cols() != p.W_x.rows() || cache.c.cols() != p.units()) {
    throw ShapeError("lstm_cell_backward: cache does not match parameters");
  }
  const int u = p.units();
  const auto dh = grad_h.array();
  const auto dc = (grad_c.array() +
                   dh * cache.o.array() * (1.0 - cache.tanh_c.array().square()))
                      .eval();

  Matrix dz(cache.x.rows(), 4 * u);
  const auto& i = cache.i.array();
  const auto& f = cache.f.array();
  const auto& o = cache.o.array();
  const auto& g = cache.g.array();
  dz.middleCols(0, u) = (dc * g * i * (1.0 - i)).matrix();
  dz.middleCols(u, u) = (dc * cache.c_prev.array() * f * (1.0 - f)).matrix();
  dz.middleCols(2 * u, u) = (dh * cache.tanh_c.array() * o * (1.0 - o)).matrix();
  dz.middleCols(3 * u, u) = (dc * i * (1.0 - g.square())).matrix();

  grads.W_x.noalias() += cache.x.transpose() * dz;
  grads.W_h.noalias() += cache.h_prev.transpose() * dz;
  grads.b += dz.colwise().sum();

  LstmCellInputGrads out;
  out.dx = dz * p.W_x.transpose();
  out.dh_prev = dz * p.W_h.transpose();
  out.dc_prev = (dc * f).matrix();
  return out;
}

// --- LSTM layer ------------------------------------------------------------

LstmLayer::LstmLayer(int input_size, int units, bool return_sequences, bool reverse)
    : params(input_size, units),
      grads(input_size, units),
      return_sequences_(return_sequences),
      reverse_(reverse) {}

void LstmLayer::init(Rng& rng) {
  const int u = units();
  glorot_uniform(params.W_x, rng, params.W_x.rows(), params.W_x.cols());
  glorot_uniform(params.W_h, rng, params.W_h.rows(), params.W_h.cols());
  params.b.setZero();
  params.bias(Gate::Forget).setOnes();
  (void)u;
}

Sequence LstmLayer::forward(const Sequence& x) {
  if (x.empty()) throw ShapeError("lstm forward: empty sequence");
  const auto T = x.size();
  const auto B = x.front().rows();
  Matrix h = Matrix::Zero(B, units());
  Matrix c = Matrix::Zero(B, units());
  caches_.clear();
  caches_.reserve(T);
  Sequence out(return_sequences_ ? T : 1);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse_ ? T - 1 - s : s;
    auto step = lstm_cell_forward(x[t], h, c, params);
    h = std::move(step.h);
    c = std::move(step.c);
    caches_.push_back(std::move(step.cache));
    if (return_sequences_) out[t] = h;
  }
  if (!return_sequences_) out[0] = h;
  return out;
}

Sequence LstmLayer::backward(const Sequence& grad_out) {
  const auto T = caches_.size();
  if (grad_out.size() != (return_sequences_ ? T : 1)) {
    throw ShapeError("lstm backward: gradient has " + std::to_string(grad_out.size()) +
                     " steps, forward produced " +
                     std::to_string(return_sequences_ ? T : 1));
  }
  const auto B = caches_.front().x.rows();
  Matrix dh_next = Matrix::Zero(B, units());
  Matrix dc_next = Matrix::Zero(B, units());
  Sequence dx(T);
  for (std::size_t s = T; s-- > 0;) {
    const std::size_t t = reverse_ ? T - 1 - s : s;
    Matrix dh = dh_next;
    if (return_sequences_) {
      dh += grad_out[t];
    } else if (s == T - 1) {
      dh += grad_out[0];
    }
    auto g = lstm_cell_backward(caches_[s], dh, dc_next, params, grads);
    dx[t] = std::move(g.dx);
    dh_next = std::move(g.dh_prev);
    dc_next = std::move(g.dc_prev);
  }
  return dx;
}

void LstmLayer::collect(ParamList& out, const std::string& prefix) {
  out.push_back({prefix + ".W_x", &params.W_x, &grads.W_x});
  out.push_back({prefix + ".W_h", &params.W_h, &grads.W_h});
  out.push_back({prefix + ".b", &params.b, &grads.b});
}

// --- Bidirectional ---------------------------------------------------------

BidirectionalLstm::BidirectionalLstm(int input_size, int units, bool return_sequences)
    : forward_(input_size, units, return_sequences, false),
      backward_(input_size, units, return_sequences, true) {}

void BidirectionalLstm::init(Rng& rng) {
  forward_.init(rng);
  backward_.init(rng);
}

Sequence BidirectionalLstm::forward(const Sequence& x) {
  const Sequence f = forward_.forward(x);
  const Sequence b = backward_.forward(x);
  Sequence out(f.size());
  const int u = forward_.units();
  for (std::size_t t = 0; t < f.size(); ++t) {
    out[t].resize(f[t].rows(), 2 * u);
    out[t] << f[t], b[t];
  }
  return out;
}

Sequence BidirectionalLstm::backward(const Sequence& grad_out) {
  const int u = forward_.units();
  Sequence gf(grad_out.size()), gb(grad_out.size());
  for (std::size_t t = 0; t < grad_out.size(); ++t) {
    gf[t] = grad_out[t].leftCols(u);
    gb[t] = grad_out[t].rightCols(u);
  }
  Sequence dx = forward_.backward(gf);
  const Sequence dxb = backward_.backward(gb);
  for (std::size_t t = 0; t < dx.size(); ++t) dx[t] += dxb[t];
  return dx;
}

void BidirectionalLstm::collect(ParamList& out, const std::string& prefix) {
  forward_.collect(out, prefix + ".fwd");
  backward_.collect(out, prefix + ".bwd");
}

// --- Conv1D ----------------------------------------------------------------

Conv1D::Conv1D(int channels, int filters, int kernel, Activation act)
    : W(Matrix::Zero(kernel * channels, filters)),
      b(Matrix::Zero(1, filters)),
      dW(Matrix::Zero(kernel * channels, filters)),
      db(Matrix::Zero(1, filters)),
      activation(act),
      channels_(channels),
      kernel_(kernel) {}

void Conv1D::init(Rng& rng) {
  // Keras convention: fan_in = kernel * channels, fan_out = kernel * filters.
  glorot_uniform(W, rng, static_cast<Eigen::Index>(kernel_) * channels_,
                 static_cast<Eigen::Index>(kernel_) * W.cols());
  b.setZero();
}

Sequence Conv1D::forward(const Sequence& x) {
  if (x.size() < static_cast<std::size_t>(kernel_)) {
    throw ShapeError("conv1d: sequence length " + std::to_string(x.size()) +
                     " shorter than kernel " + std::to_string(kernel_));
  }
  const std::size_t L = x.size() - static_cast<std::size_t>(kernel_) + 1;
  const auto B = x.front().rows();
  windows_.assign(L, Matrix());
  y_.assign(L, Matrix());
  for (std::size_t t = 0; t < L; ++t) {
    Matrix& win = windows_[t];
    win.resize(B, static_cast<Eigen::Index>(kernel_) * channels_);
    for (int j = 0; j < kernel_; ++j) {
      const auto& xt = x[t + static_cast<std::size_t>(j)];
      if (xt.cols() != channels_) {
        throw ShapeError("conv1d: input step " + shape_string(xt) + " but " +
                         std::to_string(channels_) + " channels expected");
      }
      win.middleCols(j * channels_, channels_) = xt;
    }
    Matrix z = win * W;
    z.rowwise() += b.row(0);
    apply_activation(z, activation);
    y_[t] = std::move(z);
  }
  return y_;
}

Sequence Conv1D::backward(const Sequence& grad_out) {
  if (grad_out.size() != y_.size()) throw ShapeError("conv1d backward: step count mismatch");
  const std::size_t T = y_.size() + static_cast<std::size_t>(kernel_) - 1;
  const auto B = y_.front().rows();
  Sequence dx(T, Matrix::Zero(B, channels_));
  for (std::size_t t = 0; t < y_.size(); ++t) {
    const Matrix dz = activation_backward(grad_out[t], y_[t], activation);
    dW.noalias() += windows_[t].transpose() * dz;
    db += dz.colwise().sum();
    const Matrix dwin = dz * W.transpose();
    for (int j = 0; j < kernel_; ++j) {
      dx[t + static_cast<std::size_t>(j)] += dwin.middleCols(j * channels_, channels_);
    }
  }
  return dx;
}

void Conv1D::collect(ParamList& out, const std::string& prefix) {
  out.push_back({prefix + ".W", &W, &dW});
  out.push_back({prefix + ".b", &b, &db});
}

// --- MaxPool1D ---------------------------------------------------------------

Sequence MaxPool1D::forward(const Sequence& x) {
  const std::size_t P = x.size() / static_cast<std::size_t>(width_);
  if (P == 0) {
    throw ShapeError("maxpool1d: sequence length " + std::to_string(x.size()) +
                     " shorter than pool width " + std::to_string(width_));
  }
  input_steps_ = x.size();
  Sequence out(P);
  argmax_.assign(P, {});
  for (std::size_t p = 0; p < P; ++p) {
    const std::size_t base = p * static_cast<std::size_t>(width_);
    Matrix best = x[base];
    auto& arg = argmax_[p];
    arg.setZero(best.rows(), best.cols());
    for (int j = 1; j < width_; ++j) {
      const Matrix& cand = x[base + static_cast<std::size_t>(j)];
      for (Eigen::Index r = 0; r < best.rows(); ++r)
        for (Eigen::Index c = 0; c < best.cols(); ++c)
          if (cand(r, c) > best(r, c)) {
            best(r, c) = cand(r, c);
            arg(r, c) = j;
          }
    }
    out[p] = std::move(best);
  }
  return out;
}

Sequence MaxPool1D::backward(const Sequence& grad_out) {
  if (grad_out.size() != argmax_.size()) throw ShapeError("maxpool1d backward: step mismatch");
  const auto B = grad_out.front().rows();
  const auto C = grad_out.front().cols();
  Sequence dx(input_steps_, Matrix::Zero(B, C));
  for (std::size_t p = 0; p < grad_out.size(); ++p) {
    const std::size_t base = p * static_cast<std::size_t>(width_);
    for (Eigen::Index r = 0; r < B; ++r)
      for (Eigen::Index c = 0; c < C; ++c)
        dx[base + static_cast<std::size_t>(argmax_[p](r, c))](r, c) += grad_out[p](r, c);
  }
  return dx;
}

Matrix flatten(const Sequence& x) {
  if (x.empty()) throw ShapeError("flatten: empty sequence");
  const auto B = x.front().rows();
  const auto F = x.front().cols();
  Matrix out(B, F * static_cast<Eigen::Index>(x.size()));
  for (std::size_t t = 0; t < x.size(); ++t) {
    out.middleCols(static_cast<Eigen::Index>(t) * F, F) = x[t];
  }
  return out;
}

Sequence unflatten(const Matrix& flat, std::size_t steps) {
  if (steps == 0 || flat.cols() % static_cast<Eigen::Index>(steps) != 0) {
    throw ShapeError("unflatten: " + shape_string(flat) + " not divisible into " +
                     std::to_string(steps) + " steps");
  }
  const auto F = flat.cols() / static_cast<Eigen::Index>(steps);
  Sequence out(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    out[t] = flat.middleCols(static_cast<Eigen::Index>(t) * F, F);
  }
  return out;
}

}  // namespace delaycast
