#include "proxest/synth.hpp"

#include <cmath>
#include <string>

#include "proxest/effects.hpp"
#include "proxest/errors.hpp"
#include "proxest/stochastic.hpp"

namespace proxest {

namespace {

void validate_arm(const LogisticArm& arm, int k, int p, const char* label) {
  if (arm.covariates.size() != p) {
    throw InvalidConfigError(std::string(label) + ": covariate coefficients must have length p");
  }
  if (arm.u_offsets.size() != k) {
    throw InvalidConfigError(std::string(label) + ": class offsets must have length K");
  }
  if (arm.u_offsets(k - 1) != 0.0) {
    throw InvalidConfigError(std::string(label) +
                             ": the last class offset must be 0");
  }
}

double arm_logit(const LogisticArm& arm, const Eigen::Ref<const Eigen::RowVectorXd>& c,
                 int x, int u) {
  double eta = arm.intercept + arm.treatment * x + arm.u_offsets(u);
  if (c.size() > 0) eta += c.dot(arm.covariates);
  return eta;
}

}  // namespace

void DgpConfig::validate() const {
  if (n < 1) throw InvalidConfigError("sample size must be at least 1");
  if (k < 2) throw InvalidConfigError("need at least 2 confounder classes");
  const int pp = p();
  for (const auto& g : gaussian) {
    if (!(g.sd > 0.0)) throw InvalidConfigError("gaussian covariate needs sd > 0");
  }
  for (const auto& b : binary) {
    if (b.p < 0.0 || b.p > 1.0) {
      throw InvalidConfigError("binary covariate probability must lie in [0, 1]");
    }
  }
  if (u_given_c.rows() != k - 1 || u_given_c.cols() != 1 + pp) {
    throw InvalidConfigError("class model must be (K-1) x (1+p)");
  }
  validate_arm(x_given_cu, k, pp, "treatment model");
  validate_arm(y_given_xcu, k, pp, "outcome model");
  if (pi_true.rows() != k || pi_true.cols() != k) {
    throw InvalidConfigError("true confusion matrix must be K x K");
  }
  if (!is_row_stochastic(pi_true, 1e-9)) {
    throw InvalidConfigError("true confusion matrix rows must be probability vectors");
  }
  if (!category_names.empty() && static_cast<int>(category_names.size()) != k) {
    throw InvalidConfigError("category names must match K");
  }
}

Eigen::VectorXd class_probabilities(const DgpConfig& config,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& c) {
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(config.k);
  Eigen::RowVectorXd aug(1 + c.size());
  aug(0) = 1.0;
  aug.tail(c.size()) = c;
  for (int r = 0; r < config.k - 1; ++r) {
    logits(r) = aug.dot(config.u_given_c.row(r));
  }
  return softmax(logits);
}

Cohort generate_cohort(const DgpConfig& config) {
  return generate_cohort(config, SeedStream::root(config.seed));
}

Cohort generate_cohort(const DgpConfig& config, SeedStream stream) {
  config.validate();
  const long n = config.n;
  const int p = config.p();
  const int gauss = static_cast<int>(config.gaussian.size());

  Cohort cohort;
  cohort.k = config.k;
  cohort.category_names = config.category_names;
  cohort.y.resize(n);
  cohort.x.resize(n);
  cohort.c.resize(n, p);
  cohort.u_star.resize(n);
  cohort.u_true.resize(n);

  Rng rng(stream.derive("cohort"));
  for (long i = 0; i < n; ++i) {
    // fixed draw order per unit: covariates, class, treatment, outcome, proxy
    for (int j = 0; j < gauss; ++j) {
      cohort.c(i, j) = config.gaussian[j].mean + config.gaussian[j].sd * rng.normal();
    }
    for (int j = gauss; j < p; ++j) {
      cohort.c(i, j) = rng.bernoulli(config.binary[j - gauss].p) ? 1.0 : 0.0;
    }
    const Eigen::VectorXd pu = class_probabilities(config, cohort.c.row(i));
    const int u = rng.categorical(pu);
    cohort.u_true(i) = u;
    const int x = rng.bernoulli(sigmoid(arm_logit(config.x_given_cu, cohort.c.row(i), 0, u)));
    cohort.x(i) = x;
    cohort.y(i) = rng.bernoulli(sigmoid(arm_logit(config.y_given_xcu, cohort.c.row(i), x, u)));
    cohort.u_star(i) = rng.categorical(config.pi_true.row(u).transpose());
  }
  cohort.validate();
  return cohort;
}

namespace {

// walks every binary covariate pattern with its probability
template <typename Body>
void for_each_pattern(const DgpConfig& config, Body&& body) {
  const int p = static_cast<int>(config.binary.size());
  const long patterns = 1L << p;
  Eigen::RowVectorXd c(p);
  for (long mask = 0; mask < patterns; ++mask) {
    double weight = 1.0;
    for (int j = 0; j < p; ++j) {
      const bool on = (mask >> j) & 1;
      c(j) = on ? 1.0 : 0.0;
      weight *= on ? config.binary[j].p : 1.0 - config.binary[j].p;
    }
    body(c, weight);
  }
}

void require_enumerable(const DgpConfig& config) {
  if (!config.enumerable()) {
    throw EnumerationTooLargeError(
        "exact enumeration needs all-binary covariates, at most " +
        std::to_string(kMaxEnumerationCovariates) + " of them");
  }
}

}  // namespace

TrueEffects true_effects(const DgpConfig& config) {
  config.validate();
  require_enumerable(config);

  KahanSum risk[2];
  for_each_pattern(config, [&](const Eigen::RowVectorXd& c, double weight) {
    const Eigen::VectorXd pu = class_probabilities(config, c);
    for (int u = 0; u < config.k; ++u) {
      for (int x = 0; x < 2; ++x) {
        const double py = sigmoid(arm_logit(config.y_given_xcu, c, x, u));
        risk[x].add(weight * pu(u) * py);
      }
    }
  });

  TrueEffects effects;
  effects.risk_treated = risk[1].value();
  effects.risk_control = risk[0].value();
  const EffectRatios ratios = effects_from_risks(effects.risk_treated, effects.risk_control);
  effects.risk_ratio = ratios.risk_ratio;
  effects.odds_ratio = ratios.odds_ratio;
  return effects;
}

PopulationNuisance::PopulationNuisance(const DgpConfig& config) {
  config.validate();
  require_enumerable(config);
  k_ = config.k;
  const int p = static_cast<int>(config.binary.size());
  const long cells = 1L << p;

  patterns_.resize(cells, p);
  weight_.resize(cells);
  propensity_.resize(cells);
  class_prob_.resize(cells);
  proxy_.resize(cells);
  outcome_.resize(cells);

  long cell = 0;
  for_each_pattern(config, [&](const Eigen::RowVectorXd& c, double weight) {
    patterns_.row(cell) = c;
    weight_[cell] = weight;
    const Eigen::VectorXd pu = class_probabilities(config, c);
    class_prob_[cell] = pu;

    // P(X=1 | c) = sum_u P(X=1 | c, u) P(u | c)
    Eigen::VectorXd px1(k_);
    for (int u = 0; u < k_; ++u) {
      px1(u) = sigmoid(arm_logit(config.x_given_cu, c, 0, u));
    }
    propensity_[cell] = px1.dot(pu);

    for (int x = 0; x < 2; ++x) {
      // P(U = u | x, c) by Bayes over the treatment draw
      Eigen::VectorXd pu_given_x(k_);
      for (int u = 0; u < k_; ++u) {
        const double arm = x == 1 ? px1(u) : 1.0 - px1(u);
        pu_given_x(u) = arm * pu(u);
      }
      const double norm = pu_given_x.sum();
      if (norm <= 0.0) {
        pu_given_x.setConstant(1.0 / k_);
      } else {
        pu_given_x /= norm;
      }

      // P(U* = j | x, c) and the outcome mixture behind each proxy label
      Eigen::VectorXd pstar = Eigen::VectorXd::Zero(k_);
      Eigen::VectorXd events = Eigen::VectorXd::Zero(k_);
      for (int u = 0; u < k_; ++u) {
        const double py = sigmoid(arm_logit(config.y_given_xcu, c, x, u));
        for (int j = 0; j < k_; ++j) {
          const double m = config.pi_true(u, j) * pu_given_x(u);
          pstar(j) += m;
          events(j) += m * py;
        }
      }
      proxy_[cell][x] = pstar;
      Eigen::VectorXd py_given_star(k_);
      for (int j = 0; j < k_; ++j) {
        py_given_star(j) = pstar(j) > 0.0 ? events(j) / pstar(j) : 0.5;
      }
      outcome_[cell][x] = py_given_star;
    }
    ++cell;
  });
}

double PopulationNuisance::outcome_probability(long cell, int x, int u) const {
  if (u < 0 || u >= k_) throw DataError("category label out of range");
  return outcome_[cell][x](u);
}

Eigen::VectorXd PopulationNuisance::proxy_distribution(long cell, int x) const {
  return proxy_[cell][x];
}

double PopulationNuisance::propensity(long cell) const {
  return propensity_[cell];
}

}  // namespace proxest
