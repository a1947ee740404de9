#ifndef DELAYCAST_LINEAR_HPP
#define DELAYCAST_LINEAR_HPP

#include <vector>

#include "delaycast/numerics.hpp"

namespace delaycast {

/// Multi-output least squares, Y ~ [1|X] beta. Row 0 of beta is the
/// intercept; column j holds target j.
struct LinearModel {
  Matrix beta;
};

/// Singular values of [1|X] below this fraction of the largest count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Columns of [1|X] (0 = intercept, j = feature j - 1) that are linearly
/// dependent on the columns before them.
std::vector<int> dependent_columns(const Matrix& X);

/// Least-squares fit through a Householder QR of the augmented design.
/// Throws DataError when n <= p or the design is rank deficient.
LinearModel fit_linear(const Matrix& X, const Matrix& Y);

Matrix predict_linear(const LinearModel& model, const Matrix& X);

}  // namespace delaycast

#endif  // DELAYCAST_LINEAR_HPP
