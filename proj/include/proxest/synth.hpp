#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "proxest/cohort.hpp"
#include "proxest/nuisance.hpp"
#include "proxest/rng.hpp"

namespace proxest {

// Largest binary-covariate count the exact enumeration will walk (2^6
// patterns times 2*2*K outcome cells).
inline constexpr int kMaxEnumerationCovariates = 6;

struct GaussianCovariate {
  double mean = 0.0;
  double sd = 1.0;
};
struct BinaryCovariate {
  double p = 0.5;
};

// Logistic coefficient block with one additive offset per confounder class.
// The last class offset is pinned to 0 by validation so intercepts are
// identified.
struct LogisticArm {
  double intercept = 0.0;
  double treatment = 0.0;  // ignored by the treatment model itself
  Eigen::VectorXd covariates;
  Eigen::VectorXd u_offsets;  // length K
};

// Generating process: C ~ product of independent covariates (gaussian block
// first, then binary), U | C multinomial-logistic with reference class K-1,
// X | C,U and Y | X,C,U logistic, U* | U drawn from the true confusion rows.
struct DgpConfig {
  long n = 0;
  int k = 2;
  std::vector<GaussianCovariate> gaussian;
  std::vector<BinaryCovariate> binary;
  Eigen::MatrixXd u_given_c;  // (K-1) x (1 + p), row r = logit of class r vs K-1
  LogisticArm x_given_cu;
  LogisticArm y_given_xcu;
  Eigen::MatrixXd pi_true;  // K x K, rows P(U* | U = u)
  std::uint64_t seed = 0;
  std::vector<std::string> category_names;

  int p() const { return static_cast<int>(gaussian.size() + binary.size()); }
  void validate() const;
  bool enumerable() const {
    return gaussian.empty() &&
           static_cast<int>(binary.size()) <= kMaxEnumerationCovariates;
  }
};

// class probabilities P(U = . | c) under the config
Eigen::VectorXd class_probabilities(const DgpConfig& config,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& c);

Cohort generate_cohort(const DgpConfig& config);
Cohort generate_cohort(const DgpConfig& config, SeedStream stream);

struct TrueEffects {
  double risk_treated = 0.0;
  double risk_control = 0.0;
  double risk_ratio = 1.0;
  double odds_ratio = 1.0;
};

// Exact counterfactual risks by enumerating every covariate pattern and
// confounder class. Only defined for all-binary covariate blocks small
// enough to walk.
TrueEffects true_effects(const DgpConfig& config);

// Exact conditional tables implied by the config and pi_true, one cell per
// covariate pattern, weighted by P(C = pattern). Feeding this predictor into
// the recovery step gives population-level (infinite-sample) estimates.
class PopulationNuisance : public NuisancePredictor {
 public:
  explicit PopulationNuisance(const DgpConfig& config);

  long cells() const override { return static_cast<long>(weight_.size()); }
  int k() const override { return k_; }
  double weight(long cell) const override { return weight_[cell]; }
  double outcome_probability(long cell, int x, int u) const override;
  Eigen::VectorXd proxy_distribution(long cell, int x) const override;
  double propensity(long cell) const override;

  // exact P(U = . | pattern), for oracle-side checks
  Eigen::VectorXd class_marginal(long cell) const { return class_prob_[cell]; }
  Eigen::RowVectorXd pattern(long cell) const { return patterns_.row(cell); }

 private:
  int k_ = 2;
  Eigen::MatrixXd patterns_;  // cells x p
  std::vector<double> weight_;
  std::vector<double> propensity_;
  std::vector<Eigen::VectorXd> class_prob_;               // P(U | c)
  std::vector<std::array<Eigen::VectorXd, 2>> proxy_;     // P(U* | x, c)
  std::vector<std::array<Eigen::VectorXd, 2>> outcome_;   // P(Y=1 | x, u*, c)
};

}  // namespace proxest
