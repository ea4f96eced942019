#include "proxest/confusion.hpp"

#include <string>

#include "proxest/errors.hpp"
#include "proxest/stochastic.hpp"

namespace proxest {

MisclassificationModel MisclassificationModel::identity(int k) {
  MisclassificationModel model;
  model.pi = Eigen::MatrixXd::Identity(k, k);
  model.m = model.pi;
  model.m_inverse = model.pi;
  model.condition_number = 1.0;
  model.smoothing_alpha = 0.0;
  return model;
}

MisclassificationModel misclassification_from_pi(const Eigen::MatrixXd& pi,
                                                 double smoothing_alpha) {
  if (pi.rows() < 2 || pi.rows() != pi.cols())
    throw DataError("misclassification matrix must be square with K >= 2");
  if (!is_row_stochastic(pi, 1e-9))
    throw DataError("misclassification matrix is not row-stochastic");

  MisclassificationModel model;
  model.pi = pi;
  // renormalize so downstream identities hold to machine precision
  for (int r = 0; r < model.pi.rows(); ++r) model.pi.row(r) /= model.pi.row(r).sum();
  model.m = model.pi.transpose();
  model.smoothing_alpha = smoothing_alpha;
  model.condition_number = condition_number(model.m);
  if (!(model.condition_number <= kConditionCutoff))
    throw SingularMatrixError("adjustment matrix condition number " +
                              std::to_string(model.condition_number) +
                              " exceeds cutoff");
  model.m_inverse = model.m.fullPivLu().solve(
      Eigen::MatrixXd::Identity(model.m.rows(), model.m.cols()));
  return model;
}

MisclassificationModel row_normalize(const ConfusionCounts& counts, double alpha) {
  const int k = counts.k();
  if (k < 2 || counts.counts.cols() != k)
    throw DataError("confusion counts must be square with K >= 2");
  if ((counts.counts.array() < 0).any())
    throw DataError("confusion counts must be nonnegative");

  Eigen::MatrixXd pi(k, k);
  for (int r = 0; r < k; ++r) {
    const Eigen::VectorXd row =
        counts.counts.row(r).cast<double>().array() + alpha;
    const double sum = row.sum();
    if (sum <= 0.0) {
      if (alpha == 0.0)
        throw ZeroRowError("confusion row " + std::to_string(r) +
                           " has zero total and alpha = 0");
      throw DataError("confusion row " + std::to_string(r) + " has zero total");
    }
    pi.row(r) = row.transpose() / sum;
  }
  MisclassificationModel model = misclassification_from_pi(pi, alpha);
  model.smoothing_alpha = alpha;
  return model;
}

double accuracy(const ConfusionCounts& counts) {
  const long total = counts.total();
  if (total <= 0) throw DataError("confusion matrix has zero total count");
  const long trace = counts.counts.cast<long>().diagonal().sum();
  return static_cast<double>(trace) / static_cast<double>(total);
}

}  // namespace proxest
