#ifndef DELAYCAST_NUMERICS_HPP
#define DELAYCAST_NUMERICS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "delaycast/error.hpp"

namespace delaycast {

template <typename Scalar>
using MatrixX =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Row-major double matrix used for every table, weight and gradient.
using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

template <typename A, typename B>
void require_same_shape(const char* op, const Eigen::EigenBase<A>& a,
                        const Eigen::EigenBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) +
                     " vs " + shape_string(b));
  }
}

// Shape-checked wrappers. Eigen only asserts on mismatches in debug builds;
// these throw in every build.

template <typename A, typename B>
MatrixX<typename A::Scalar> matmul(const Eigen::MatrixBase<A>& a,
                                   const Eigen::MatrixBase<B>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
  }
  return a * b;
}

template <typename A, typename B>
MatrixX<typename A::Scalar> add(const Eigen::MatrixBase<A>& a,
                                const Eigen::MatrixBase<B>& b) {
  require_same_shape("add", a, b);
  return a + b;
}

template <typename A, typename B>
MatrixX<typename A::Scalar> hadamard(const Eigen::MatrixBase<A>& a,
                                     const Eigen::MatrixBase<B>& b) {
  require_same_shape("hadamard", a, b);
  return a.cwiseProduct(b);
}

template <typename A>
MatrixX<typename A::Scalar> transpose(const Eigen::MatrixBase<A>& a) {
  return a.transpose();
}

template <typename A>
MatrixX<typename A::Scalar> slice(const Eigen::MatrixBase<A>& a,
                                  Eigen::Index row, Eigen::Index rows,
                                  Eigen::Index col, Eigen::Index cols) {
  if (row < 0 || col < 0 || rows < 0 || cols < 0 || row + rows > a.rows() ||
      col + cols > a.cols()) {
    throw ShapeError("slice: block (" + std::to_string(row) + "," +
                     std::to_string(col) + ")+" + std::to_string(rows) + "x" +
                     std::to_string(cols) + " outside " + shape_string(a));
  }
  return a.block(row, col, rows, cols);
}

/// Mean absolute error over every entry. Reductions run left to right in
/// row-major order so results are reproducible bit for bit.
template <typename A, typename B>
typename A::Scalar mae(const Eigen::MatrixBase<A>& pred,
                       const Eigen::MatrixBase<B>& truth) {
  require_same_shape("mae", pred, truth);
  using Scalar = typename A::Scalar;
  if (pred.size() == 0) throw ShapeError("mae: empty input");
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (Eigen::Index j = 0; j < pred.cols(); ++j)
      sum += std::abs(pred(i, j) - truth(i, j));
  return sum / static_cast<Scalar>(pred.size());
}

template <typename A, typename B>
typename A::Scalar mse(const Eigen::MatrixBase<A>& pred,
                       const Eigen::MatrixBase<B>& truth) {
  require_same_shape("mse", pred, truth);
  using Scalar = typename A::Scalar;
  if (pred.size() == 0) throw ShapeError("mse: empty input");
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const Scalar d = pred(i, j) - truth(i, j);
      sum += d * d;
    }
  return sum / static_cast<Scalar>(pred.size());
}

/// SplitMix64 generator. The u64 stream is fully specified by the seed, so
/// it is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double exponential(double mean);
  /// Independent generator derived from this one's seed and `stream`.
  Rng substream(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x);

template <typename Scalar>
void fill_uniform(MatrixX<Scalar>& m, Rng& rng, Scalar limit) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = static_cast<Scalar>(rng.uniform(-limit, limit));
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for a list of parameter tensors.
template <typename Scalar>
struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<MatrixX<Scalar>> m;
  std::vector<MatrixX<Scalar>> v;
};

/// One Adam update over matching parameter and gradient lists. Moments are
/// allocated lazily on the first call.
template <typename Scalar>
void adam_step(std::span<MatrixX<Scalar>* const> params,
               std::span<const MatrixX<Scalar>* const> grads,
               AdamState<Scalar>& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) +
                     " parameters vs " + std::to_string(grads.size()) +
                     " gradients");
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(MatrixX<Scalar>::Zero(p->rows(), p->cols()));
      state.v.push_back(MatrixX<Scalar>::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: state holds " + std::to_string(state.m.size()) +
                     " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape("adam_step", *params[i], *grads[i]);
    require_same_shape("adam_step", *params[i], state.m[i]);
  }

  const auto& c = state.config;
  ++state.step;
  const Scalar b1 = static_cast<Scalar>(c.beta1);
  const Scalar b2 = static_cast<Scalar>(c.beta2);
  const Scalar correction1 = 1 - std::pow(b1, static_cast<Scalar>(state.step));
  const Scalar correction2 = 1 - std::pow(b2, static_cast<Scalar>(state.step));
  const Scalar lr = static_cast<Scalar>(c.learning_rate);
  const Scalar eps = static_cast<Scalar>(c.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = *grads[i];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.cwiseProduct(g);
    auto& theta = *params[i];
    for (Eigen::Index r = 0; r < theta.rows(); ++r)
      for (Eigen::Index k = 0; k < theta.cols(); ++k) {
        const Scalar m_hat = m(r, k) / correction1;
        const Scalar v_hat = v(r, k) / correction2;
        theta(r, k) -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
  }
}

template <typename Scalar>
Scalar global_norm(std::span<const MatrixX<Scalar>* const> grads) {
  Scalar sq = 0;
  for (const auto* g : grads)
    for (Eigen::Index i = 0; i < g->rows(); ++i)
      for (Eigen::Index j = 0; j < g->cols(); ++j) sq += (*g)(i, j) * (*g)(i, j);
  return std::sqrt(sq);
}

/// Rescales the gradient list in place when its joint L2 norm exceeds
/// max_norm. Returns the norm before clipping.
template <typename Scalar>
Scalar clip_global_norm(std::span<MatrixX<Scalar>* const> grads,
                        Scalar max_norm) {
  if (!(max_norm > 0)) throw DataError("clip_global_norm: max_norm must be > 0");
  std::vector<const MatrixX<Scalar>*> view(grads.begin(), grads.end());
  const Scalar norm = global_norm<Scalar>(view);
  if (norm > max_norm) {
    const Scalar scale = max_norm / norm;
    for (auto* g : grads) *g *= scale;
  }
  return norm;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central-difference check of `analytic` against f at x. Relative error
/// per coordinate is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const std::function<double(const Vector&)>& f,
                           const Vector& x, const Vector& analytic,
                           double step = 1e-5);

/// Same check over a list of parameter tensors perturbed in place. `loss`
/// re-evaluates the objective from the current parameter values.
GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<Matrix* const> params,
                           std::span<const Matrix* const> analytic,
                           double step = 1e-5);

}  // namespace delaycast

#endif  // DELAYCAST_NUMERICS_HPP
