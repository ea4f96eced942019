#include "proxest/glm.hpp"

#include <cmath>

#include "proxest/errors.hpp"
#include "proxest/stochastic.hpp"

namespace proxest {

namespace {

void check_binary_response(const Eigen::VectorXi& y) {
  for (long i = 0; i < y.size(); ++i) {
    if (y(i) != 0 && y(i) != 1) {
      throw DataError("binary response must be 0 or 1");
    }
  }
}

Eigen::VectorXd penalty_mask(int d, int unpenalized_column) {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(d);
  if (unpenalized_column >= 0 && unpenalized_column < d) {
    mask(unpenalized_column) = 0.0;
  }
  return mask;
}

// log(sum_k exp(logits_k)) over the K-1 free logits plus the implicit 0.
double log_sum_exp_with_zero(const Eigen::Ref<const Eigen::RowVectorXd>& logits) {
  double m = 0.0;
  for (long j = 0; j < logits.size(); ++j) m = std::max(m, logits(j));
  double s = std::exp(-m);
  for (long j = 0; j < logits.size(); ++j) s += std::exp(logits(j) - m);
  return m + std::log(s);
}

// probabilities of the non-reference categories, row per unit
Eigen::MatrixXd nonref_probabilities(const Eigen::MatrixXd& eta) {
  Eigen::MatrixXd probs(eta.rows(), eta.cols());
  for (long i = 0; i < eta.rows(); ++i) {
    double m = 0.0;
    for (long j = 0; j < eta.cols(); ++j) m = std::max(m, eta(i, j));
    double denom = std::exp(-m);
    for (long j = 0; j < eta.cols(); ++j) denom += std::exp(eta(i, j) - m);
    for (long j = 0; j < eta.cols(); ++j) {
      probs(i, j) = std::exp(eta(i, j) - m) / denom;
    }
  }
  return probs;
}

}  // namespace

double logistic_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXi& y,
                       const Eigen::VectorXd& beta, double ridge,
                       int unpenalized_column) {
  const Eigen::VectorXd eta = design * beta;
  double ll = 0.0;
  for (long i = 0; i < eta.size(); ++i) {
    ll += y(i) * eta(i) - log1pexp(eta(i));
  }
  const Eigen::VectorXd mask = penalty_mask(static_cast<int>(beta.size()),
                                            unpenalized_column);
  ll -= 0.5 * ridge * beta.cwiseProduct(mask).squaredNorm();
  return ll;
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& design,
                                  const Eigen::VectorXi& y,
                                  const Eigen::VectorXd& beta, double ridge,
                                  int unpenalized_column) {
  const Eigen::VectorXd eta = design * beta;
  Eigen::VectorXd mu(eta.size());
  for (long i = 0; i < eta.size(); ++i) mu(i) = sigmoid(eta(i));
  const Eigen::VectorXd mask = penalty_mask(static_cast<int>(beta.size()),
                                            unpenalized_column);
  return design.transpose() * (y.cast<double>() - mu) -
         ridge * mask.cwiseProduct(beta);
}

LogisticModel fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXi& y,
                           const GlmOptions& options) {
  const long n = design.rows();
  const int d = static_cast<int>(design.cols());
  if (y.size() != n) throw DimensionMismatchError("response length != design rows");
  if (d < 1) throw InvalidConfigError("design must have at least one column");
  if (n < d) throw InsufficientDataError("need at least as many rows as columns");
  check_binary_response(y);

  const Eigen::VectorXd mask = penalty_mask(d, options.unpenalized_column);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  double ll = logistic_loglik(design, y, beta, options.ridge,
                              options.unpenalized_column);

  int iterations = 0;
  for (; iterations < options.max_iter; ++iterations) {
    const Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd mu(n);
    for (long i = 0; i < n; ++i) mu(i) = sigmoid(eta(i));
    const Eigen::VectorXd grad =
        design.transpose() * (y.cast<double>() - mu) -
        options.ridge * mask.cwiseProduct(beta);
    const double grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (grad_norm < options.tol) break;

    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal() += options.ridge * mask;
    Eigen::LDLT<Eigen::MatrixXd> solver(hess);
    if (solver.info() != Eigen::Success) {
      throw RankDeficientError("logistic Hessian is not factorizable");
    }
    const Eigen::VectorXd delta = solver.solve(grad);
    if (!delta.allFinite()) {
      throw RankDeficientError("logistic Newton step is not finite");
    }

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      const double cand = logistic_loglik(design, y, beta + t * delta,
                                          options.ridge,
                                          options.unpenalized_column);
      if (cand > ll) {
        beta += t * delta;
        ll = cand;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // At large n the remaining improvement can sit below double
      // resolution, so the line search goes blind before the gradient
      // reaches tol. Take the full step while it still halves the gradient;
      // in that regime the objective is flat at measurement precision.
      const Eigen::VectorXd cand = beta + delta;
      const double cand_norm =
          logistic_gradient(design, y, cand, options.ridge,
                            options.unpenalized_column)
              .lpNorm<Eigen::Infinity>();
      if (cand_norm < 0.5 * grad_norm) {
        beta = cand;
        ll = logistic_loglik(design, y, beta, options.ridge,
                             options.unpenalized_column);
      } else {
        break;  // no ascent direction left at this scale
      }
    }
  }

  LogisticModel model;
  model.coefficients = beta;
  model.iterations = iterations;
  model.ridge = options.ridge;
  model.unpenalized_column = options.unpenalized_column;
  model.gradient_norm =
      logistic_gradient(design, y, beta, options.ridge, options.unpenalized_column)
          .lpNorm<Eigen::Infinity>();
  model.converged = model.gradient_norm < options.tol;
  return model;
}

double multinomial_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXi& y,
                          const Eigen::MatrixXd& coef, int k, int reference,
                          double ridge, int unpenalized_column) {
  const Eigen::MatrixXd eta = design * coef.transpose();  // n x (K-1)
  double ll = 0.0;
  for (long i = 0; i < design.rows(); ++i) {
    const int cat = y(i);
    if (cat != reference) {
      const int row = cat < reference ? cat : cat - 1;
      ll += eta(i, row);
    }
    ll -= log_sum_exp_with_zero(eta.row(i));
  }
  const Eigen::VectorXd mask = penalty_mask(static_cast<int>(coef.cols()),
                                            unpenalized_column);
  for (long r = 0; r < coef.rows(); ++r) {
    ll -= 0.5 * ridge * coef.row(r).transpose().cwiseProduct(mask).squaredNorm();
  }
  (void)k;
  return ll;
}

Eigen::MatrixXd multinomial_gradient(const Eigen::MatrixXd& design,
                                     const Eigen::VectorXi& y,
                                     const Eigen::MatrixXd& coef, int k,
                                     int reference, double ridge,
                                     int unpenalized_column) {
  const long n = design.rows();
  const int rows = k - 1;
  const Eigen::MatrixXd eta = design * coef.transpose();
  const Eigen::MatrixXd probs = nonref_probabilities(eta);
  Eigen::MatrixXd indicator = Eigen::MatrixXd::Zero(n, rows);
  for (long i = 0; i < n; ++i) {
    const int cat = y(i);
    if (cat != reference) {
      indicator(i, cat < reference ? cat : cat - 1) = 1.0;
    }
  }
  Eigen::MatrixXd grad = (design.transpose() * (indicator - probs)).transpose();
  const Eigen::VectorXd mask = penalty_mask(static_cast<int>(coef.cols()),
                                            unpenalized_column);
  for (int r = 0; r < rows; ++r) {
    grad.row(r) -= ridge * coef.row(r).cwiseProduct(mask.transpose());
  }
  return grad;
}

MultinomialModel fit_multinomial(const Eigen::MatrixXd& design,
                                 const Eigen::VectorXi& y, int k, int reference,
                                 const GlmOptions& options) {
  const long n = design.rows();
  const int d = static_cast<int>(design.cols());
  if (k < 2) throw InvalidConfigError("multinomial fit needs at least 2 categories");
  if (reference == -1) reference = k - 1;
  if (reference < 0 || reference >= k) {
    throw InvalidConfigError("reference category out of range");
  }
  if (y.size() != n) throw DimensionMismatchError("response length != design rows");
  if (n < d) throw InsufficientDataError("need at least as many rows as columns");
  for (long i = 0; i < n; ++i) {
    if (y(i) < 0 || y(i) >= k) throw DataError("category label out of range");
  }

  const int rows = k - 1;
  const Eigen::VectorXd mask = penalty_mask(d, options.unpenalized_column);
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(rows, d);
  double ll = multinomial_loglik(design, y, coef, k, reference, options.ridge,
                                 options.unpenalized_column);

  int iterations = 0;
  for (; iterations < options.max_iter; ++iterations) {
    const Eigen::MatrixXd grad =
        multinomial_gradient(design, y, coef, k, reference, options.ridge,
                             options.unpenalized_column);
    const double grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (grad_norm < options.tol) break;

    const Eigen::MatrixXd eta = design * coef.transpose();
    const Eigen::MatrixXd probs = nonref_probabilities(eta);
    // block Hessian over the flattened (row-major by class row) parameter
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(rows * d, rows * d);
    for (int r = 0; r < rows; ++r) {
      for (int s = r; s < rows; ++s) {
        Eigen::VectorXd w(n);
        for (long i = 0; i < n; ++i) {
          const double pr = probs(i, r);
          const double ps = probs(i, s);
          w(i) = r == s ? pr * (1.0 - pr) : -pr * ps;
        }
        const Eigen::MatrixXd block = design.transpose() * w.asDiagonal() * design;
        hess.block(r * d, s * d, d, d) = block;
        if (s != r) hess.block(s * d, r * d, d, d) = block.transpose();
      }
      hess.block(r * d, r * d, d, d).diagonal() += options.ridge * mask;
    }

    Eigen::VectorXd grad_flat(rows * d);
    for (int r = 0; r < rows; ++r) {
      grad_flat.segment(r * d, d) = grad.row(r).transpose();
    }
    Eigen::LDLT<Eigen::MatrixXd> solver(hess);
    if (solver.info() != Eigen::Success) {
      throw RankDeficientError("multinomial Hessian is not factorizable");
    }
    const Eigen::VectorXd delta_flat = solver.solve(grad_flat);
    if (!delta_flat.allFinite()) {
      throw RankDeficientError("multinomial Newton step is not finite");
    }
    Eigen::MatrixXd delta(rows, d);
    for (int r = 0; r < rows; ++r) {
      delta.row(r) = delta_flat.segment(r * d, d).transpose();
    }

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      const double cand =
          multinomial_loglik(design, y, coef + t * delta, k, reference,
                             options.ridge, options.unpenalized_column);
      if (cand > ll) {
        coef += t * delta;
        ll = cand;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // same flat-objective escape as the logistic fit
      const Eigen::MatrixXd cand = coef + delta;
      const double cand_norm =
          multinomial_gradient(design, y, cand, k, reference, options.ridge,
                               options.unpenalized_column)
              .lpNorm<Eigen::Infinity>();
      if (cand_norm < 0.5 * grad_norm) {
        coef = cand;
        ll = multinomial_loglik(design, y, coef, k, reference, options.ridge,
                                options.unpenalized_column);
      } else {
        break;
      }
    }
  }

  MultinomialModel model;
  model.coefficients = coef;
  model.k = k;
  model.reference = reference;
  model.iterations = iterations;
  model.ridge = options.ridge;
  model.unpenalized_column = options.unpenalized_column;
  model.gradient_norm =
      multinomial_gradient(design, y, coef, k, reference, options.ridge,
                           options.unpenalized_column)
          .lpNorm<Eigen::Infinity>();
  model.converged = model.gradient_norm < options.tol;
  return model;
}

double predict_logistic(const LogisticModel& model,
                        const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != model.coefficients.size()) {
    throw DimensionMismatchError("prediction row has wrong width");
  }
  const double p = sigmoid(row.dot(model.coefficients));
  return std::min(std::max(p, kProbFloor), 1.0 - kProbFloor);
}

Eigen::VectorXd predict_multinomial(const MultinomialModel& model,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != model.coefficients.cols()) {
    throw DimensionMismatchError("prediction row has wrong width");
  }
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(model.k);
  for (int r = 0; r < model.k - 1; ++r) {
    logits(model.row_category(r)) = row.dot(model.coefficients.row(r));
  }
  Eigen::VectorXd probs = softmax(logits);
  for (int j = 0; j < model.k; ++j) probs(j) = std::max(probs(j), kProbFloor);
  probs /= probs.sum();
  return probs;
}

}  // namespace proxest
