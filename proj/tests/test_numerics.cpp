#include <fstream>
#include <sstream>

#include "doctest.h"

#include "delaycast/numerics.hpp"
#include "test_util.hpp"

using namespace delaycast;
using testutil::random_matrix;

TEST_CASE("matmul identity and transpose product rule") {
  Rng rng(1);
  const Matrix A = random_matrix(rng, 3, 3);
  CHECK(matmul(Matrix::Identity(3, 3), A) == A);

  const Matrix B = random_matrix(rng, 3, 4);
  const Matrix C = random_matrix(rng, 4, 2);
  // naive triple loop
  Matrix ref = Matrix::Zero(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 4; ++k) ref(i, j) += B(i, k) * C(k, j);
  const Matrix lhs = transpose(matmul(B, C));
  const Matrix rhs = matmul(transpose(C), transpose(B));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((matmul(B, C) - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("shape errors name both shapes") {
  const Matrix a = Matrix::Zero(2, 3);
  try {
    matmul(a, a);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("2x3 vs 2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, Matrix::Zero(3, 2)), ShapeError);
  CHECK_THROWS_AS(hadamard(a, Matrix::Zero(2, 2)), ShapeError);
  CHECK_THROWS_AS(slice(a, 1, 2, 0, 1), ShapeError);
  CHECK(slice(a, 1, 1, 1, 2).cols() == 2);
}

TEST_CASE("mae and mse") {
  Matrix p(1, 3), t(1, 3);
  p << 1, 2, 3;
  t << 1, 2, 3;
  CHECK(mae(p, t) == 0.0);
  CHECK(mse(p, t) == 0.0);

  Matrix p2 = Matrix::Zero(1, 2), t2(1, 2);
  t2 << 3, -3;
  CHECK(mae(p2, t2) == 3.0);

  Matrix p3 = Matrix::Zero(1, 1), t3(1, 1);
  t3 << 2;
  CHECK(mse(p3, t3) == 4.0);

  Rng rng(5);
  const Matrix a = random_matrix(rng, 5, 5), b = random_matrix(rng, 5, 5);
  double sa = 0, ss = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      sa += std::abs(a(i, j) - b(i, j));
      ss += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    }
  CHECK(std::abs(mae(a, b) - sa / 25) < 1e-12);
  CHECK(std::abs(mse(a, b) - ss / 25) < 1e-12);
  CHECK_THROWS_AS(mae(a, Matrix::Zero(5, 4)), ShapeError);
  CHECK_THROWS_AS(mse(Matrix(0, 0), Matrix(0, 0)), ShapeError);
}

TEST_CASE("rng golden vector for seed 42") {
  std::ifstream in(std::string(DELAYCAST_TEST_DATA) + "/rng_seed42.txt");
  REQUIRE(in);
  std::string line;
  std::vector<std::pair<std::uint64_t, double>> golden;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::uint64_t u;
    double x;
    ss >> u >> x;
    golden.emplace_back(u, x);
  }
  REQUIRE(golden.size() == 4);
  Rng a(42), b(42);
  for (const auto& [u, x] : golden) {
    CHECK(a.next_u64() == u);
    CHECK(b.uniform() == x);
  }
}

TEST_CASE("rng determinism and ranges") {
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.below(7) < 7u);
    CHECK(r.exponential(2.0) >= 0.0);
  }
  // substreams differ from each other and from the parent
  const Rng root(11);
  Rng s1 = root.substream(1), s2 = root.substream(2), s1b = root.substream(1);
  const auto x1 = s1.next_u64();
  CHECK(x1 != s2.next_u64());
  CHECK(x1 == s1b.next_u64());
}

TEST_CASE("adam step") {
  SUBCASE("zero gradient leaves parameters") {
    Matrix theta = Matrix::Constant(2, 2, 0.5), g = Matrix::Zero(2, 2);
    AdamState<double> st;
    Matrix* p[] = {&theta};
    const Matrix* gr[] = {&g};
    adam_step<double>(p, gr, st);
    CHECK(theta == Matrix::Constant(2, 2, 0.5));
    CHECK(st.step == 1);
  }
  SUBCASE("first step from zero with unit gradient") {
    Matrix theta = Matrix::Zero(1, 1), g = Matrix::Ones(1, 1);
    AdamState<double> st;
    Matrix* p[] = {&theta};
    const Matrix* gr[] = {&g};
    adam_step<double>(p, gr, st);
    CHECK(theta(0, 0) == doctest::Approx(-1e-3 / (1 + 1e-8)).epsilon(1e-15));
  }
  SUBCASE("two steps match a scripted reference") {
    Matrix theta(1, 2), g(1, 2);
    theta << 0.3, -0.2;
    AdamState<double> st;
    Matrix* p[] = {&theta};
    const Matrix* gr[] = {&g};
    double ref[2] = {0.3, -0.2}, m[2] = {0, 0}, v[2] = {0, 0};
    const double gs[2][2] = {{0.5, -1.5}, {0.25, 2.0}};
    for (int t = 1; t <= 2; ++t) {
      g << gs[t - 1][0], gs[t - 1][1];
      adam_step<double>(p, gr, st);
      for (int i = 0; i < 2; ++i) {
        m[i] = 0.9 * m[i] + 0.1 * gs[t - 1][i];
        v[i] = 0.999 * v[i] + 0.001 * gs[t - 1][i] * gs[t - 1][i];
        const double mh = m[i] / (1 - std::pow(0.9, t));
        const double vh = v[i] / (1 - std::pow(0.999, t));
        ref[i] -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
      }
    }
    CHECK(std::abs(theta(0, 0) - ref[0]) < 1e-15);
    CHECK(std::abs(theta(0, 1) - ref[1]) < 1e-15);
  }
  SUBCASE("mismatched shapes throw") {
    Matrix theta = Matrix::Zero(1, 2), g = Matrix::Zero(2, 1);
    AdamState<double> st;
    Matrix* p[] = {&theta};
    const Matrix* gr[] = {&g};
    CHECK_THROWS_AS(adam_step<double>(p, gr, st), ShapeError);
  }
}

TEST_CASE("global norm clipping") {
  Matrix g(1, 2);
  g << 3, 4;
  Matrix* gs[] = {&g};
  CHECK(clip_global_norm<double>(gs, 1.0) == doctest::Approx(5.0));
  CHECK(g(0, 0) == doctest::Approx(0.6));
  CHECK(g(0, 1) == doctest::Approx(0.8));

  Matrix h(1, 1);
  h << 0.5;
  Matrix* hs[] = {&h};
  clip_global_norm<double>(hs, 1.0);
  CHECK(h(0, 0) == 0.5);

  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a = random_matrix(rng, 3, 4, -5, 5), b = random_matrix(rng, 2, 2, -5, 5);
    Matrix* ab[] = {&a, &b};
    const double max_norm = rng.uniform(0.1, 3.0);
    clip_global_norm<double>(ab, max_norm);
    const Matrix* cab[] = {&a, &b};
    CHECK(global_norm<double>(cab) <= max_norm + 1e-12);
  }
  CHECK_THROWS_AS(clip_global_norm<double>(gs, 0.0), DataError);
}

TEST_CASE("grad_check on a quadratic and a wrong gradient") {
  Rng rng(4);
  Vector x(6);
  for (int i = 0; i < 6; ++i) x(i) = rng.uniform(-2, 2);
  auto f = [](const Vector& v) { return v.squaredNorm(); };
  CHECK(grad_check(f, x, 2.0 * x).max_relative_error < 1e-9);
  const auto bad = grad_check(f, x, 4.0 * x);
  CHECK(bad.max_relative_error == doctest::Approx(0.5).epsilon(1e-6));

  auto nan_f = [](const Vector&) { return std::nan(""); };
  CHECK_THROWS(grad_check(nan_f, x, x));
}
