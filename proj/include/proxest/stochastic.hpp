#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace proxest {

// Shared scalar and small-matrix numerics. Free functions accept Eigen
// expressions so callers can pass blocks and products without materializing.

inline double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow
inline double log1pexp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

template <typename Derived>
double condition_number(const Eigen::MatrixBase<Derived>& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.derived());
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

template <typename Derived>
bool is_row_stochastic(const Eigen::MatrixBase<Derived>& m, double tol = 1e-12) {
  if (m.rows() == 0 || m.rows() != m.cols()) return false;
  if ((m.derived().array() < -tol).any()) return false;
  return ((m.derived().rowwise().sum().array() - 1.0).abs() <= tol).all();
}

// softmax of a logit vector, computed via the max shift
template <typename Derived>
Eigen::VectorXd softmax(const Eigen::MatrixBase<Derived>& logits) {
  const Eigen::VectorXd v = logits.derived();
  const double shift = v.maxCoeff();
  Eigen::VectorXd e = (v.array() - shift).exp();
  return e / e.sum();
}

// Compensated accumulation; sequential Kahan keeps long reductions
// deterministic and accurate regardless of magnitude spread.
class KahanSum {
public:
  void add(double v) {
    const double y = v - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Welford running mean/stddev; exact on constant inputs (the increment is
// zero bit-for-bit, so the mean of B identical values is that value).
class RunningMean {
public:
  void add(double v) {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
  }
  double mean() const { return mean_; }
  // sample standard deviation; 0 for fewer than two observations
  double stddev() const {
    return n_ < 2 ? 0.0 : std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_ - 1)));
  }
  long count() const { return n_; }

private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace proxest
