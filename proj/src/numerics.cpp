#include "delaycast/numerics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace delaycast {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return mix64(state_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw DataError("Rng::below: n must be positive");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential(double mean) {
  double u = uniform();
  while (u <= 0.0) u = uniform();
  return -mean * std::log(u);
}

Rng Rng::substream(std::uint64_t stream) const {
  return Rng(mix64(seed_ ^ mix64(stream + 0x632BE59BD9B4E019ULL)));
}

namespace {

double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

double checked(double v) {
  if (!std::isfinite(v)) throw DataError("grad_check: objective is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<double(const Vector&)>& f,
                           const Vector& x, const Vector& analytic,
                           double step) {
  require_same_shape("grad_check", x, analytic);
  GradCheckResult result;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = checked(f(probe));
    probe(i) = x(i) - step;
    const double down = checked(f(probe));
    probe(i) = x(i);
    const double numeric = (up - down) / (2.0 * step);
    const double err = relative_error(analytic(i), numeric);
    if (err > result.max_relative_error || i == 0) {
      result = {err, static_cast<std::size_t>(i), analytic(i), numeric};
    }
  }
  return result;
}

GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<Matrix* const> params,
                           std::span<const Matrix* const> analytic,
                           double step) {
  if (params.size() != analytic.size()) {
    throw ShapeError("grad_check: parameter and gradient counts differ");
  }
  GradCheckResult result;
  std::size_t flat = 0;
  bool first = true;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    require_same_shape("grad_check", p, *analytic[t]);
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j, ++flat) {
        const double saved = p(i, j);
        p(i, j) = saved + step;
        const double up = checked(loss());
        p(i, j) = saved - step;
        const double down = checked(loss());
        p(i, j) = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = (*analytic[t])(i, j);
        const double err = relative_error(a, numeric);
        if (first || err > result.max_relative_error) {
          result = {err, flat, a, numeric};
          first = false;
        }
      }
  }
  return result;
}

}  // namespace delaycast
