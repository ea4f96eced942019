#pragma once

#include <Eigen/Dense>

namespace proxest {

// Confusion counts with the fixed orientation convention used throughout the
// project: true categories on rows, predicted categories on columns.
struct ConfusionCounts {
  Eigen::MatrixXi counts;

  int k() const { return static_cast<int>(counts.rows()); }
  long total() const { return counts.cast<long>().sum(); }
};

// Row-stochastic error model P(U*|U) together with the column-stochastic
// adjustment matrix and its inverse.
//
//   pi(u, u*)    = P(U* = u* | U = u)           row-stochastic
//   m            = pi^T                         column-stochastic
//   m_inverse    = m^{-1}                       columns sum to 1
//
// m maps a probability vector indexed by latent U to one indexed by observed
// U*; m_inverse undoes it. Both preserve total mass because every column of
// m sums to one.
struct MisclassificationModel {
  Eigen::MatrixXd pi;
  Eigen::MatrixXd m;
  Eigen::MatrixXd m_inverse;
  double condition_number = 0.0;
  double smoothing_alpha = 0.0;

  int k() const { return static_cast<int>(pi.rows()); }

  static MisclassificationModel identity(int k);
};

// Condition numbers above this are treated as singular: the inverse would
// amplify noise past any useful signal.
inline constexpr double kConditionCutoff = 1e8;

// Normalizes (counts + alpha) rows into pi and derives m / m_inverse.
// Throws ZeroRowError when alpha == 0 and a row is empty, SingularMatrixError
// when the adjustment matrix is numerically singular.
MisclassificationModel row_normalize(const ConfusionCounts& counts, double alpha = 0.0);

// Builds the model directly from a row-stochastic probability matrix
// (exact error rates, e.g. a synthetic DGP's true matrix).
MisclassificationModel misclassification_from_pi(const Eigen::MatrixXd& pi,
                                                 double smoothing_alpha = 0.0);

// trace / total
double accuracy(const ConfusionCounts& counts);

}  // namespace proxest
