#include "delaycast/linear.hpp"

#include <string>

namespace delaycast {

namespace {

Matrix augment(const Matrix& X) {
  Matrix A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  return A;
}

// Numerical rank of the columns `cols` of R with an absolute cutoff.
Eigen::Index rank_of(const Eigen::MatrixXd& R, const std::vector<int>& cols,
                     double cutoff) {
  Eigen::MatrixXd sub(R.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    sub.col(static_cast<Eigen::Index>(k)) = R.col(cols[k]);
  }
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(sub).singularValues();
  return (sv.array() > cutoff).count();
}

}  // namespace

std::vector<int> dependent_columns(const Matrix& X) {
  const Eigen::MatrixXd A = augment(X);
  // A = QR with orthonormal Q, so every column subset of A has the same
  // singular values as the matching columns of R.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::Index p1 = A.cols();
  const Eigen::Index k = std::min(A.rows(), p1);
  const Eigen::MatrixXd R =
      qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(R).singularValues();
  const double cutoff = kRankTolerance * (sv.size() ? sv(0) : 0.0);

  std::vector<int> kept;
  std::vector<int> dependent;
  Eigen::Index rank = 0;
  for (int j = 0; j < p1; ++j) {
    kept.push_back(j);
    const auto r = rank_of(R, kept, cutoff);
    if (r > rank) {
      rank = r;
    } else {
      kept.pop_back();
      dependent.push_back(j);
    }
  }
  return dependent;
}

LinearModel fit_linear(const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows()) {
    throw ShapeError("fit_linear: X " + shape_string(X) + " vs Y " + shape_string(Y));
  }
  if (X.rows() <= X.cols()) {
    throw DataError("fit_linear: need more rows than features (n=" +
                    std::to_string(X.rows()) + ", p=" + std::to_string(X.cols()) + ")");
  }
  const auto dependent = dependent_columns(X);
  if (!dependent.empty()) {
    std::string list;
    for (int j : dependent) {
      if (!list.empty()) list += ",";
      list += j == 0 ? std::string("intercept") : "x" + std::to_string(j - 1);
    }
    throw DataError("fit_linear: rank-deficient design, dependent columns: " + list);
  }
  const Eigen::MatrixXd A = augment(X);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd Yc = Y;
  LinearModel model;
  model.beta = qr.solve(Yc);
  return model;
}

Matrix predict_linear(const LinearModel& model, const Matrix& X) {
  if (X.cols() + 1 != model.beta.rows()) {
    throw ShapeError("predict_linear: X " + shape_string(X) + " vs beta " +
                     shape_string(model.beta));
  }
  Matrix out = X * model.beta.bottomRows(model.beta.rows() - 1);
  out.rowwise() += model.beta.row(0);
  return out;
}

}  // namespace delaycast
