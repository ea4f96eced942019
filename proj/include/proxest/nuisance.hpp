#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "proxest/cohort.hpp"
#include "proxest/design.hpp"
#include "proxest/glm.hpp"

namespace proxest {

// Conditional-probability source the recovery step consumes. A "cell" is one
// covariate stratum with an attached weight; for fitted backends the cells
// are the cohort rows with equal weights, for the population backend they are
// covariate patterns weighted by their probability.
class NuisancePredictor {
 public:
  virtual ~NuisancePredictor() = default;

  virtual long cells() const = 0;
  virtual int k() const = 0;
  // cell weights, nonnegative, summing to 1
  virtual double weight(long cell) const = 0;
  // P(Y=1 | X=x, U*=u, C=c_cell)
  virtual double outcome_probability(long cell, int x, int u) const = 0;
  // P(U*=. | X=x, C=c_cell), length K
  virtual Eigen::VectorXd proxy_distribution(long cell, int x) const = 0;
  // P(X=1 | C=c_cell)
  virtual double propensity(long cell) const = 0;
};

// Three regression models sharing one set of cohort rows. Per-cell linear
// predictor pieces that do not depend on (x, u) are cached at construction.
class NuisanceModels : public NuisancePredictor {
 public:
  NuisanceModels(LogisticModel outcome, MultinomialModel proxy,
                 LogisticModel propensity, DesignSpec outcome_spec,
                 DesignSpec proxy_spec, DesignSpec propensity_spec,
                 const Cohort& cohort);

  long cells() const override { return n_; }
  int k() const override { return k_; }
  double weight(long cell) const override { return 1.0 / static_cast<double>(n_); }
  double outcome_probability(long cell, int x, int u) const override;
  Eigen::VectorXd proxy_distribution(long cell, int x) const override;
  double propensity(long cell) const override;

  bool all_converged() const;

  LogisticModel outcome_model;
  MultinomialModel proxy_model;
  LogisticModel propensity_model;
  DesignSpec outcome_spec;
  DesignSpec proxy_spec;
  DesignSpec propensity_spec;
  long rows_used = 0;

 private:
  long n_ = 0;
  int k_ = 1;
  // cached per-cell contributions of the covariate block (plus intercept)
  Eigen::VectorXd outcome_base_;
  Eigen::MatrixXd proxy_base_;  // n x (K-1)
  Eigen::VectorXd propensity_prob_;
  double outcome_x_coef_ = 0.0;
  Eigen::VectorXd outcome_u_coef_;  // per category, reference entry 0
  Eigen::VectorXd proxy_x_coef_;    // per coefficient row
};

struct NuisanceOptions {
  GlmOptions glm;
  int reference_category = -1;  // -1 resolves to K-1
  bool require_convergence = true;
};

// Fits propensity, proxy, and outcome models on the given cohort rows. The
// cohort must already have its missing-proxy policy applied.
NuisanceModels fit_nuisance(const Cohort& cohort,
                            const NuisanceOptions& options = {});

// Saturated empirical-frequency backend over discrete covariate patterns.
// Consistent without any model-form assumption; refuses cohorts with more
// than `max_patterns` distinct covariate rows.
class FrequencyNuisance : public NuisancePredictor {
 public:
  FrequencyNuisance(const Cohort& cohort, int max_patterns = 64);

  long cells() const override { return static_cast<long>(pattern_weight_.size()); }
  int k() const override { return k_; }
  double weight(long cell) const override { return pattern_weight_[cell]; }
  double outcome_probability(long cell, int x, int u) const override;
  Eigen::VectorXd proxy_distribution(long cell, int x) const override;
  double propensity(long cell) const override;

 private:
  int k_ = 1;
  std::vector<double> pattern_weight_;
  std::vector<double> propensity_;                  // P(X=1 | pattern)
  std::vector<std::array<Eigen::VectorXd, 2>> proxy_;    // per pattern, per x
  std::vector<std::array<Eigen::VectorXd, 2>> outcome_;  // P(Y=1 | x, u*), length K
};

enum class NuisanceBackend { glm, frequency };

std::unique_ptr<NuisancePredictor> make_nuisance(const Cohort& cohort,
                                                 NuisanceBackend backend,
                                                 const NuisanceOptions& options);

}  // namespace proxest
