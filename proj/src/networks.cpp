#include "delaycast/networks.hpp"

#include <string>

namespace delaycast {

std::string_view to_string(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::Mlp: return "mlp";
    case NetworkKind::Lstm: return "lstm";
    case NetworkKind::BiLstm: return "bilstm";
    case NetworkKind::Hybrid: return "hybrid";
  }
  return "?";
}

namespace {

NetworkKind parse_network_kind(const std::string& s) {
  for (auto k : {NetworkKind::Mlp, NetworkKind::Lstm, NetworkKind::BiLstm, NetworkKind::Hybrid})
    if (to_string(k) == s) return k;
  throw ParseError("unknown network kind '" + s + "'");
}

}  // namespace

nlohmann::json NetworkConfig::to_json() const {
  return {{"kind", std::string(to_string(kind))},
          {"inputs", inputs},
          {"outputs", outputs},
          {"hidden1", hidden1},
          {"hidden2", hidden2},
          {"units", units},
          {"dense", dense},
          {"filters", filters},
          {"kernel", kernel},
          {"pool", pool},
          {"window", window}};
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.kind = parse_network_kind(j.at("kind").get<std::string>());
  c.inputs = j.at("inputs").get<int>();
  c.outputs = j.at("outputs").get<int>();
  c.hidden1 = j.at("hidden1").get<int>();
  c.hidden2 = j.at("hidden2").get<int>();
  c.units = j.at("units").get<int>();
  c.dense = j.at("dense").get<int>();
  c.filters = j.at("filters").get<int>();
  c.kernel = j.at("kernel").get<int>();
  c.pool = j.at("pool").get<int>();
  c.window = j.at("window").get<int>();
  return c;
}

int NetworkConfig::min_window() const {
  // conv output must hold at least one full pooling window
  return kind == NetworkKind::Hybrid ? kernel + pool - 1 : 1;
}

NetworkConfig network_config(NetworkKind kind, int outputs, int window, int inputs) {
  NetworkConfig c;
  c.kind = kind;
  c.outputs = outputs;
  c.inputs = inputs;
  c.window = window;
  return c;
}

Network::Network(const NetworkConfig& config) : config_(config), pool_(config.pool) {
  const auto& c = config_;
  if (c.inputs < 1 || c.outputs < 1 || c.window < 1) {
    throw DataError("network: inputs, outputs and window must be >= 1");
  }
  if (c.window < c.min_window()) {
    throw DataError(std::string(to_string(c.kind)) + " needs window >= " +
                    std::to_string(c.min_window()) + ", got " + std::to_string(c.window));
  }
  switch (c.kind) {
    case NetworkKind::Mlp:
      d1_ = DenseLayer(c.inputs, c.hidden1, Activation::Relu);
      d2_ = DenseLayer(c.hidden1, c.hidden2, Activation::Relu);
      out_ = DenseLayer(c.hidden2, c.outputs, Activation::Identity);
      break;
    case NetworkKind::Lstm:
      l1_ = LstmLayer(c.inputs, c.units, true);
      l2_ = LstmLayer(c.units, c.units, false);
      d1_ = DenseLayer(c.units, c.dense, Activation::Relu);
      out_ = DenseLayer(c.dense, c.outputs, Activation::Identity);
      break;
    case NetworkKind::BiLstm:
      b1_ = BidirectionalLstm(c.inputs, c.units, true);
      b2_ = BidirectionalLstm(2 * c.units, c.units, false);
      d1_ = DenseLayer(2 * c.units, c.dense, Activation::Relu);
      out_ = DenseLayer(c.dense, c.outputs, Activation::Identity);
      break;
    case NetworkKind::Hybrid: {
      conv_ = Conv1D(c.inputs, c.filters, c.kernel, Activation::Relu);
      const int pooled = (c.window - c.kernel + 1) / c.pool;
      cnn_dense_ = DenseLayer(pooled * c.filters, c.dense, Activation::Relu);
      b1_ = BidirectionalLstm(c.inputs, c.units, true);
      l2_ = LstmLayer(2 * c.units, c.units, false);
      d1_ = DenseLayer(c.units, c.dense, Activation::Relu);
      out_ = DenseLayer(2 * c.dense, c.outputs, Activation::Identity);
      break;
    }
  }
}

void Network::init(std::uint64_t seed) {
  const Rng root(seed);
  std::uint64_t stream = 0;
  auto next = [&] { return root.substream(stream++); };
  auto init_dense = [&](DenseLayer& d) {
    if (d.W.size() == 0) return;
    Rng r = next();
    d.init(r);
  };
  switch (config_.kind) {
    case NetworkKind::Mlp:
      init_dense(d1_);
      init_dense(d2_);
      break;
    case NetworkKind::Lstm: {
      Rng r1 = next(), r2 = next();
      l1_.init(r1);
      l2_.init(r2);
      init_dense(d1_);
      break;
    }
    case NetworkKind::BiLstm: {
      Rng r1 = next(), r2 = next();
      b1_.init(r1);
      b2_.init(r2);
      init_dense(d1_);
      break;
    }
    case NetworkKind::Hybrid: {
      Rng rc = next();
      conv_.init(rc);
      init_dense(cnn_dense_);
      Rng r1 = next(), r2 = next();
      b1_.init(r1);
      l2_.init(r2);
      init_dense(d1_);
      break;
    }
  }
  init_dense(out_);
}

Matrix Network::forward(const Sequence& x) {
  if (x.empty()) throw ShapeError("network forward: empty sequence");
  if (static_cast<int>(x.size()) != config_.window) {
    throw ShapeError("network forward: got " + std::to_string(x.size()) +
                     " steps, built for " + std::to_string(config_.window));
  }
  for (const auto& step : x) {
    if (step.cols() != config_.inputs) {
      throw ShapeError("network forward: step " + shape_string(step) + ", expected " +
                       std::to_string(config_.inputs) + " features");
    }
  }
  steps_ = x.size();
  switch (config_.kind) {
    case NetworkKind::Mlp:
      return out_.forward(d2_.forward(d1_.forward(x.back())));
    case NetworkKind::Lstm:
      return out_.forward(d1_.forward(l2_.forward(l1_.forward(x)).front()));
    case NetworkKind::BiLstm:
      return out_.forward(d1_.forward(b2_.forward(b1_.forward(x)).front()));
    case NetworkKind::Hybrid: {
      const Sequence pooled = pool_.forward(conv_.forward(x));
      pooled_steps_ = pooled.size();
      const Matrix cnn = cnn_dense_.forward(flatten(pooled));
      const Matrix rnn = d1_.forward(l2_.forward(b1_.forward(x)).front());
      Matrix joined(cnn.rows(), cnn.cols() + rnn.cols());
      joined << cnn, rnn;
      return out_.forward(joined);
    }
  }
  return {};
}

void Network::backward(const Matrix& grad_out) {
  const Matrix g = out_.backward(grad_out);
  switch (config_.kind) {
    case NetworkKind::Mlp:
      d1_.backward(d2_.backward(g));
      break;
    case NetworkKind::Lstm:
      l1_.backward(l2_.backward({d1_.backward(g)}));
      break;
    case NetworkKind::BiLstm:
      b1_.backward(b2_.backward({d1_.backward(g)}));
      break;
    case NetworkKind::Hybrid: {
      const Eigen::Index cw = cnn_dense_.out();
      const Matrix g_flat = cnn_dense_.backward(g.leftCols(cw));
      conv_.backward(pool_.backward(unflatten(g_flat, pooled_steps_)));
      b1_.backward(l2_.backward({d1_.backward(g.rightCols(g.cols() - cw))}));
      break;
    }
  }
}

void Network::zero_grad() {
  for (auto& p : params()) p.grad->setZero();
}

ParamList Network::params() {
  ParamList out;
  switch (config_.kind) {
    case NetworkKind::Mlp:
      d1_.collect(out, "dense1");
      d2_.collect(out, "dense2");
      break;
    case NetworkKind::Lstm:
      l1_.collect(out, "lstm1");
      l2_.collect(out, "lstm2");
      d1_.collect(out, "dense1");
      break;
    case NetworkKind::BiLstm:
      b1_.collect(out, "bilstm1");
      b2_.collect(out, "bilstm2");
      d1_.collect(out, "dense1");
      break;
    case NetworkKind::Hybrid:
      conv_.collect(out, "conv");
      cnn_dense_.collect(out, "cnn_dense");
      b1_.collect(out, "bilstm1");
      l2_.collect(out, "lstm2");
      d1_.collect(out, "dense1");
      break;
  }
  out_.collect(out, "out");
  return out;
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (const auto& p : params()) n += static_cast<std::size_t>(p.value->size());
  return n;
}

std::size_t window_count(std::size_t rows, int window) {
  if (window < 1) throw DataError("window must be >= 1");
  const auto T = static_cast<std::size_t>(window);
  if (rows < T) {
    throw DataError("need at least " + std::to_string(T) + " rows for window " +
                    std::to_string(T) + ", got " + std::to_string(rows));
  }
  return rows - T + 1;
}

Sequence gather_windows(const Matrix& X, std::span<const std::size_t> starts, int window) {
  Sequence out(static_cast<std::size_t>(window));
  const auto B = static_cast<Eigen::Index>(starts.size());
  for (int s = 0; s < window; ++s) {
    Matrix& m = out[static_cast<std::size_t>(s)];
    m.resize(B, X.cols());
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto row = static_cast<Eigen::Index>(starts[static_cast<std::size_t>(b)]) + s;
      if (row >= X.rows()) throw ShapeError("gather_windows: window runs past the last row");
      m.row(b) = X.row(row);
    }
  }
  return out;
}

SequenceBatch make_sequences(const Matrix& X, const Matrix& Y, int window) {
  if (X.rows() != Y.rows()) {
    throw ShapeError("make_sequences: X " + shape_string(X) + " vs Y " + shape_string(Y));
  }
  const std::size_t count = window_count(static_cast<std::size_t>(X.rows()), window);
  std::vector<std::size_t> starts(count);
  for (std::size_t i = 0; i < count; ++i) starts[i] = i;
  SequenceBatch batch;
  batch.inputs = gather_windows(X, starts, window);
  batch.targets = Y.bottomRows(static_cast<Eigen::Index>(count));
  return batch;
}

}  // namespace delaycast
