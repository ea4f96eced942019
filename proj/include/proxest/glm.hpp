#pragma once

#include <Eigen/Dense>

namespace proxest {

// Newton/IRLS controls shared by both solvers. The ridge penalty skips the
// column named by `unpenalized_column` (the intercept) so that intercept-only
// fits reproduce closed-form frequencies.
struct GlmOptions {
  double ridge = 1e-6;
  double tol = 1e-8;  // max-norm of the penalized gradient
  int max_iter = 100;
  int max_halvings = 30;
  int unpenalized_column = 0;  // -1 penalizes every column
};

struct LogisticModel {
  Eigen::VectorXd coefficients;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  double ridge = 0.0;
  int unpenalized_column = 0;
};

// Rows of `coefficients` hold the logits of the non-reference categories in
// ascending category order; the reference category's logits are fixed at 0.
struct MultinomialModel {
  Eigen::MatrixXd coefficients;  // (K-1) x d
  int k = 0;
  int reference = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  double ridge = 0.0;
  int unpenalized_column = 0;

  // maps coefficient row -> category and back
  int row_category(int row) const { return row < reference ? row : row + 1; }
  int category_row(int category) const {
    return category < reference ? category : category - 1;
  }
};

inline constexpr double kProbFloor = 1e-12;

// Penalized Bernoulli log-likelihood and its gradient, exposed for
// finite-difference checks.
double logistic_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXi& y,
                       const Eigen::VectorXd& beta, double ridge,
                       int unpenalized_column);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& design,
                                  const Eigen::VectorXi& y,
                                  const Eigen::VectorXd& beta, double ridge,
                                  int unpenalized_column);

double multinomial_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXi& y,
                          const Eigen::MatrixXd& coef, int k, int reference,
                          double ridge, int unpenalized_column);
Eigen::MatrixXd multinomial_gradient(const Eigen::MatrixXd& design,
                                     const Eigen::VectorXi& y,
                                     const Eigen::MatrixXd& coef, int k,
                                     int reference, double ridge,
                                     int unpenalized_column);

LogisticModel fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXi& y,
                           const GlmOptions& options = {});
MultinomialModel fit_multinomial(const Eigen::MatrixXd& design,
                                 const Eigen::VectorXi& y, int k,
                                 int reference = -1,
                                 const GlmOptions& options = {});

// P(Y=1 | row), clamped to [kProbFloor, 1 - kProbFloor].
double predict_logistic(const LogisticModel& model,
                        const Eigen::Ref<const Eigen::RowVectorXd>& row);

// Category probabilities, each clamped below by kProbFloor and renormalized.
Eigen::VectorXd predict_multinomial(const MultinomialModel& model,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& row);

}  // namespace proxest
