#include "doctest.h"

#include "delaycast/error.hpp"
#include "delaycast/layers.hpp"
#include "gradcheck_util.hpp"
#include "test_util.hpp"

using namespace delaycast;
using testutil::random_matrix;

namespace {

constexpr int kSeeds = 20;
constexpr double kTol = 1e-4;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Sequence random_sequence(Rng& rng, int steps, int batch, int width) {
  Sequence s;
  for (int t = 0; t < steps; ++t) s.push_back(random_matrix(rng, batch, width));
  return s;
}

void bind_inputs(testutil::Probe& probe, Sequence& x, Sequence& dx) {
  for (std::size_t t = 0; t < x.size(); ++t) {
    probe.inputs.push_back(&x[t]);
    probe.input_grads.push_back(&dx[t]);
  }
}

}  // namespace

TEST_CASE("dense gradients") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    DenseLayer layer(5, 4, seed % 2 ? Activation::Relu : Activation::Identity);
    layer.init(rng);
    layer.b = random_matrix(rng, 1, 4);
    Matrix x = random_matrix(rng, 3, 5), dx;
    testutil::Probe probe;
    layer.collect(probe.params, "d");
    probe.inputs = {&x};
    probe.input_grads = {&dx};
    const auto r = testutil::check_gradients(
        probe, [&] { return layer.forward(x); }, [&](const Matrix& g) { dx = layer.backward(g); }, rng);
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("lstm cell forward") {
  SUBCASE("zero parameters and state") {
    LstmCellParams p(1, 1);
    const auto r = lstm_cell_forward(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1), p);
    CHECK(r.h(0, 0) == 0.0);
    CHECK(r.c(0, 0) == 0.0);
    CHECK(r.cache.i(0, 0) == 0.5);
    CHECK(r.cache.f(0, 0) == 0.5);
    CHECK(r.cache.o(0, 0) == 0.5);
    CHECK(r.cache.g(0, 0) == 0.0);
  }
  SUBCASE("zero parameters, carried cell state") {
    LstmCellParams p(1, 1);
    const auto r = lstm_cell_forward(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Constant(1, 1, 2.0), p);
    CHECK(r.c(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.h(0, 0) == doctest::Approx(0.3807970779778823).epsilon(1e-14));
  }
  SUBCASE("matches a straight-line evaluation") {
    Rng rng(77);
    const int in = 3, u = 4, B = 2;
    LstmCellParams p(in, u);
    p.W_x = random_matrix(rng, in, 4 * u);
    p.W_h = random_matrix(rng, u, 4 * u);
    p.b = random_matrix(rng, 1, 4 * u);
    const Matrix x = random_matrix(rng, B, in), h = random_matrix(rng, B, u), c = random_matrix(rng, B, u);
    const auto r = lstm_cell_forward(x, h, c, p);
    for (int n = 0; n < B; ++n)
      for (int k = 0; k < u; ++k) {
        double z[4];
        for (int gate = 0; gate < 4; ++gate) {
          const int col = gate * u + k;
          z[gate] = p.b(0, col);
          for (int a = 0; a < in; ++a) z[gate] += x(n, a) * p.W_x(a, col);
          for (int a = 0; a < u; ++a) z[gate] += h(n, a) * p.W_h(a, col);
        }
        const double i = sigmoid(z[0]), f = sigmoid(z[1]), o = sigmoid(z[2]), g = std::tanh(z[3]);
        const double cn = f * c(n, k) + i * g;
        CHECK(std::abs(r.c(n, k) - cn) < 1e-12);
        CHECK(std::abs(r.h(n, k) - o * std::tanh(cn)) < 1e-12);
      }
  }
  SUBCASE("shape mismatch") {
    LstmCellParams p(2, 3);
    CHECK_THROWS_AS(lstm_cell_forward(Matrix::Zero(1, 3), Matrix::Zero(1, 3), Matrix::Zero(1, 3), p), ShapeError);
  }
}

TEST_CASE("lstm gradients through four steps") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(100 + seed));
    LstmLayer layer(2, 3, true, seed % 2 == 1);
    layer.init(rng);
    Sequence x = random_sequence(rng, 4, 2, 2), dx;
    testutil::Probe probe;
    layer.collect(probe.params, "l");
    dx.resize(x.size());
    bind_inputs(probe, x, dx);
    const auto r = testutil::check_gradients(
        probe, [&] { return flatten(layer.forward(x)); },
        [&](const Matrix& g) {
          const auto d = layer.backward(unflatten(g, 4));
          for (std::size_t t = 0; t < d.size(); ++t) dx[t] = d[t];
        },
        rng);
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("lstm final-state gradients") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(200 + seed));
    LstmLayer layer(3, 4, false);
    layer.init(rng);
    Sequence x = random_sequence(rng, 5, 3, 3), dx(5);
    testutil::Probe probe;
    layer.collect(probe.params, "l");
    bind_inputs(probe, x, dx);
    const auto r = testutil::check_gradients(
        probe, [&] { return layer.forward(x).back(); },
        [&](const Matrix& g) {
          const auto d = layer.backward(Sequence{g});
          for (std::size_t t = 0; t < d.size(); ++t) dx[t] = d[t];
        },
        rng);
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("lstm zero upstream gradient") {
  Rng rng(5);
  LstmLayer layer(2, 3, true);
  layer.init(rng);
  const Sequence x = random_sequence(rng, 4, 2, 2);
  layer.forward(x);
  Sequence zero(4, Matrix::Zero(2, 3));
  const auto dx = layer.backward(zero);
  for (const auto& d : dx) CHECK(d.cwiseAbs().maxCoeff() == 0.0);
  CHECK(layer.grads.W_x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(layer.grads.W_h.cwiseAbs().maxCoeff() == 0.0);
  CHECK(layer.grads.b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("saturated gates carry the cell state unchanged") {
  Rng rng(6);
  const int u = 3, in = 2, T = 6;
  LstmCellParams p(in, u);
  p.W_x = random_matrix(rng, in, 4 * u);
  p.W_h = random_matrix(rng, u, 4 * u);
  p.bias(Gate::Forget).setConstant(20.0);
  p.bias(Gate::Input).setConstant(-20.0);

  Matrix h = Matrix::Zero(1, u), c = random_matrix(rng, 1, u);
  std::vector<LstmCellCache> caches;
  for (int t = 0; t < T; ++t) {
    auto r = lstm_cell_forward(random_matrix(rng, 1, in), h, c, p);
    h = r.h;
    c = r.c;
    caches.push_back(std::move(r.cache));
  }
  // d C_T / d C_0 for each unit, through the cell path only
  for (int k = 0; k < u; ++k) {
    LstmCellParams grads(in, u);
    Matrix dh = Matrix::Zero(1, u), dc = Matrix::Zero(1, u);
    dc(0, k) = 1.0;
    for (int t = T - 1; t >= 0; --t) {
      const auto g = lstm_cell_backward(caches[static_cast<std::size_t>(t)], dh, dc, p, grads);
      dh = g.dh_prev;
      dc = g.dc_prev;
    }
    CHECK(std::abs(dc(0, k) - 1.0) < 1e-6);
  }
}

TEST_CASE("bidirectional output width and gradients") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(300 + seed));
    const bool seq = seed % 2 == 0;
    BidirectionalLstm layer(3, 2, seq);
    layer.init(rng);
    CHECK(layer.output_width() == 4);
    Sequence x = random_sequence(rng, 4, 2, 3), dx(4);
    testutil::Probe probe;
    layer.collect(probe.params, "bi");
    bind_inputs(probe, x, dx);
    const auto r = testutil::check_gradients(
        probe, [&] { return flatten(layer.forward(x)); },
        [&](const Matrix& g) {
          const auto d = layer.backward(unflatten(g, seq ? 4 : 1));
          for (std::size_t t = 0; t < d.size(); ++t) dx[t] = d[t];
        },
        rng);
    CHECK(r.max_relative_error < kTol);
  }
  BidirectionalLstm wide(11, 11, true);
  CHECK(wide.output_width() == 22);
}

TEST_CASE("bidirectional palindrome symmetry") {
  Rng rng(8);
  const int T = 5, u = 3;
  BidirectionalLstm layer(2, u, true);
  layer.init(rng);
  layer.backward_layer().params = layer.forward_layer().params;
  Sequence x(T);
  for (int t = 0; t <= T / 2; ++t) x[static_cast<std::size_t>(t)] = x[static_cast<std::size_t>(T - 1 - t)] = random_matrix(rng, 2, 2);
  const auto y = layer.forward(x);
  for (int t = 0; t < T; ++t) {
    const Matrix fwd = y[static_cast<std::size_t>(t)].leftCols(u);
    const Matrix bwd = y[static_cast<std::size_t>(T - 1 - t)].rightCols(u);
    CHECK((fwd - bwd).cwiseAbs().maxCoeff() < 1e-14);
  }

  BidirectionalLstm last(2, u, false);
  last.init(rng);
  last.backward_layer().params = last.forward_layer().params;
  const auto z = last.forward(x);
  REQUIRE(z.size() == 1);
  CHECK((z[0].leftCols(u) - z[0].rightCols(u)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("conv and pool examples") {
  Conv1D conv(1, 1, 2, Activation::Identity);
  conv.W.setOnes();
  conv.b.setZero();
  Sequence x = {Matrix::Constant(1, 1, 1), Matrix::Constant(1, 1, 2), Matrix::Constant(1, 1, 3)};
  const auto y = conv.forward(x);
  REQUIRE(y.size() == 2);
  CHECK(y[0](0, 0) == 3.0);
  CHECK(y[1](0, 0) == 5.0);
  CHECK_THROWS_AS(conv.forward(Sequence{Matrix::Zero(1, 1)}), ShapeError);

  MaxPool1D pool(2);
  Sequence p = {Matrix::Constant(1, 1, 1), Matrix::Constant(1, 1, 5), Matrix::Constant(1, 1, 2),
                Matrix::Constant(1, 1, 4)};
  const auto q = pool.forward(p);
  REQUIRE(q.size() == 2);
  CHECK(q[0](0, 0) == 5.0);
  CHECK(q[1](0, 0) == 4.0);
  const auto back = pool.backward({Matrix::Constant(1, 1, 1), Matrix::Constant(1, 1, 2)});
  CHECK(back[0](0, 0) == 0.0);
  CHECK(back[1](0, 0) == 1.0);
  CHECK(back[2](0, 0) == 0.0);
  CHECK(back[3](0, 0) == 2.0);
}

TEST_CASE("conv gradients") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(400 + seed));
    Conv1D conv(3, 4, 3, seed % 2 ? Activation::Relu : Activation::Identity);
    conv.init(rng);
    conv.b = random_matrix(rng, 1, 4);
    Sequence x = random_sequence(rng, 6, 2, 3), dx(6);
    testutil::Probe probe;
    conv.collect(probe.params, "c");
    bind_inputs(probe, x, dx);
    const auto r = testutil::check_gradients(
        probe, [&] { return flatten(conv.forward(x)); },
        [&](const Matrix& g) {
          const auto d = conv.backward(unflatten(g, 4));
          for (std::size_t t = 0; t < d.size(); ++t) dx[t] = d[t];
        },
        rng);
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("maxpool gradients") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(500 + seed));
    MaxPool1D pool(2);
    Sequence x = random_sequence(rng, 7, 2, 3), dx(7);
    testutil::Probe probe;
    bind_inputs(probe, x, dx);
    const auto r = testutil::check_gradients(
        probe, [&] { return flatten(pool.forward(x)); },
        [&](const Matrix& g) {
          const auto d = pool.backward(unflatten(g, 3));
          for (std::size_t t = 0; t < d.size(); ++t) dx[t] = d[t];
        },
        rng);
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("conv, pool and dense chained") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(600 + seed));
    Conv1D conv(2, 3, 3, Activation::Relu);
    MaxPool1D pool(2);
    DenseLayer dense(3 * 3, 2, Activation::Identity);
    conv.init(rng);
    dense.init(rng);
    Sequence x = random_sequence(rng, 8, 2, 2), dx(8);
    testutil::Probe probe;
    conv.collect(probe.params, "c");
    dense.collect(probe.params, "d");
    bind_inputs(probe, x, dx);
    const auto r = testutil::check_gradients(
        probe, [&] { return dense.forward(flatten(pool.forward(conv.forward(x)))); },
        [&](const Matrix& g) {
          const auto d = conv.backward(pool.backward(unflatten(dense.backward(g), 3)));
          for (std::size_t t = 0; t < d.size(); ++t) dx[t] = d[t];
        },
        rng);
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("flatten round trip") {
  Rng rng(1);
  const Sequence s = random_sequence(rng, 3, 2, 4);
  const Matrix f = flatten(s);
  CHECK(f.cols() == 12);
  const auto back = unflatten(f, 3);
  for (std::size_t t = 0; t < 3; ++t) CHECK(back[t] == s[t]);
}
