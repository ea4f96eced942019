// Synthetic generator: enumerated truth against frozen values, sampling laws
// at large n, the population predictor's internal consistency, and the
// configuration validation contract.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "proxest/errors.hpp"
#include "proxest/io.hpp"
#include "proxest/stochastic.hpp"
#include "proxest/synth.hpp"

#include "oracles.hpp"

using namespace proxest;
using namespace testing_oracles;

namespace {

// standalone enumerable config, independent of the shipped files
DgpConfig tiny_config() {
  DgpConfig config;
  config.n = 1000;
  config.k = 2;
  config.seed = 5;
  config.binary = {{0.5}, {0.3}};
  config.u_given_c.resize(1, 3);
  config.u_given_c << 0.2, -0.5, 0.4;
  config.x_given_cu.intercept = 0.1;
  config.x_given_cu.covariates = Eigen::Vector2d(0.3, -0.2);
  config.x_given_cu.u_offsets = Eigen::Vector2d(0.5, 0.0);
  config.y_given_xcu.intercept = -0.8;
  config.y_given_xcu.treatment = 0.6;
  config.y_given_xcu.covariates = Eigen::Vector2d(-0.4, 0.2);
  config.y_given_xcu.u_offsets = Eigen::Vector2d(0.9, 0.0);
  config.pi_true.resize(2, 2);
  config.pi_true << 0.9, 0.1, 0.15, 0.85;
  return config;
}

}  // namespace

TEST_CASE("enumerated truth matches the frozen oracle values") {
  const struct {
    const char* file;
    FrozenTruth truth;
  } cases[] = {
      {"dgp_discrete_k2.json", kTruthK2},
      {"dgp_reference.json", kTruthReference},
      {"dgp_discrete_k4.json", kTruthK4},
  };
  for (const auto& c : cases) {
    const DgpConfig config = read_dgp_json(data_path(c.file));
    const TrueEffects effects = true_effects(config);
    CHECK(std::abs(effects.risk_treated - c.truth.risk_treated) < 1e-12);
    CHECK(std::abs(effects.risk_control - c.truth.risk_control) < 1e-12);
    CHECK(std::abs(effects.risk_ratio - c.truth.risk_ratio) < 1e-12);
    CHECK(std::abs(effects.odds_ratio - c.truth.odds_ratio) < 1e-12);
  }
}

TEST_CASE("sampled cohorts converge to the population law") {
  DgpConfig config = read_dgp_json(data_path("dgp_discrete_k2.json"));
  config.n = 100000;
  const Cohort cohort = generate_cohort(config);
  REQUIRE(cohort.n() == config.n);
  REQUIRE(cohort.has_truth());
  const double n = static_cast<double>(config.n);

  // population marginals through the exact predictor
  const PopulationNuisance pop(config);
  double px1 = 0.0;
  double py1 = 0.0;
  Eigen::VectorXd pu = Eigen::VectorXd::Zero(config.k);
  Eigen::VectorXd pstar = Eigen::VectorXd::Zero(config.k);
  for (long cell = 0; cell < pop.cells(); ++cell) {
    const double w = pop.weight(cell);
    const double prop = pop.propensity(cell);
    px1 += w * prop;
    pu += w * pop.class_marginal(cell);
    const double arm[2] = {1.0 - prop, prop};
    for (int x = 0; x < 2; ++x) {
      const Eigen::VectorXd star = pop.proxy_distribution(cell, x);
      pstar += w * arm[x] * star;
      for (int j = 0; j < config.k; ++j) {
        py1 += w * arm[x] * star(j) * pop.outcome_probability(cell, x, j);
      }
    }
  }

  const auto within4se = [n](double observed, double expected) {
    const double se = std::sqrt(std::max(expected * (1.0 - expected), 1e-12) / n);
    return std::abs(observed - expected) < 4.0 * se;
  };

  CHECK(within4se(cohort.x.cast<double>().mean(), px1));
  CHECK(within4se(cohort.y.cast<double>().mean(), py1));
  for (int j = 0; j < config.k; ++j) {
    const double u_rate =
        (cohort.u_true.array() == j).cast<double>().mean();
    const double star_rate =
        (cohort.u_star.array() == j).cast<double>().mean();
    CHECK(within4se(u_rate, pu(j)));
    CHECK(within4se(star_rate, pstar(j)));
  }

  // proxy labels follow the true confusion rows
  for (int i = 0; i < config.k; ++i) {
    long ni = 0;
    Eigen::VectorXd rate = Eigen::VectorXd::Zero(config.k);
    for (long r = 0; r < cohort.n(); ++r) {
      if (cohort.u_true(r) != i) continue;
      ++ni;
      rate(cohort.u_star(r)) += 1.0;
    }
    REQUIRE(ni > 1000);
    rate /= static_cast<double>(ni);
    for (int j = 0; j < config.k; ++j) {
      const double p = config.pi_true(i, j);
      const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / ni);
      CHECK(std::abs(rate(j) - p) < 4.0 * se);
    }
  }
}

TEST_CASE("class probabilities are a softmax over the configured logits") {
  const DgpConfig config = tiny_config();
  Eigen::RowVectorXd c(2);
  c << 1.0, 0.0;
  const Eigen::VectorXd probs = class_probabilities(config, c);
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // K = 2 collapses to a plain logistic class model
  CHECK(probs(0) == doctest::Approx(sigmoid(0.2 - 0.5)).epsilon(1e-12));

  const PopulationNuisance pop(config);
  double total = 0.0;
  for (long cell = 0; cell < pop.cells(); ++cell) {
    total += pop.weight(cell);
    const Eigen::VectorXd direct = class_probabilities(config, pop.pattern(cell));
    CHECK((direct - pop.class_marginal(cell)).cwiseAbs().maxCoeff() < 1e-15);
    for (int x = 0; x < 2; ++x) {
      CHECK(pop.proxy_distribution(cell, x).sum() ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(pop.cells() == 4);  // two binary covariates
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generation is a pure function of config and seed") {
  DgpConfig config = read_dgp_json(data_path("dgp_discrete_k2.json"));
  const Cohort first = generate_cohort(config);
  const Cohort second = generate_cohort(config);
  CHECK((first.y.array() == second.y.array()).all());
  CHECK((first.x.array() == second.x.array()).all());
  CHECK((first.u_star.array() == second.u_star.array()).all());
  CHECK((first.u_true.array() == second.u_true.array()).all());
  CHECK((first.c - second.c).cwiseAbs().maxCoeff() == 0.0);

  const Cohort explicit_stream =
      generate_cohort(config, SeedStream::root(config.seed));
  CHECK((first.u_star.array() == explicit_stream.u_star.array()).all());

  config.seed += 1;
  const Cohort reseeded = generate_cohort(config);
  CHECK_FALSE((first.u_star.array() == reseeded.u_star.array()).all());
}

TEST_CASE("gaussian covariates sample with the configured moments") {
  DgpConfig config = tiny_config();
  config.gaussian = {{2.0, 0.5}};
  config.binary = {{0.4}};
  config.u_given_c.resize(1, 3);
  config.u_given_c << 0.2, -0.5, 0.4;
  config.n = 50000;
  CHECK_FALSE(config.enumerable());

  const Cohort cohort = generate_cohort(config);
  const double mean = cohort.c.col(0).mean();
  const double sd = std::sqrt(
      (cohort.c.col(0).array() - mean).square().sum() / (cohort.n() - 1));
  CHECK(std::abs(mean - 2.0) < 4.0 * 0.5 / std::sqrt(50000.0));
  CHECK(std::abs(sd - 0.5) < 0.01);
  // binary block sits after the gaussian block
  const double frac = cohort.c.col(1).mean();
  CHECK(std::abs(frac - 0.4) < 4.0 * std::sqrt(0.24 / 50000.0));
}

TEST_CASE("exact enumeration refuses configurations it cannot walk") {
  DgpConfig wide = tiny_config();
  wide.binary = std::vector<BinaryCovariate>(7, BinaryCovariate{0.5});
  wide.u_given_c = Eigen::MatrixXd::Zero(1, 8);
  wide.x_given_cu.covariates = Eigen::VectorXd::Zero(7);
  wide.y_given_xcu.covariates = Eigen::VectorXd::Zero(7);
  CHECK_FALSE(wide.enumerable());
  CHECK_THROWS_AS(true_effects(wide), EnumerationTooLargeError);
  CHECK_THROWS_AS(PopulationNuisance{wide}, EnumerationTooLargeError);

  DgpConfig continuous = read_dgp_json(data_path("dgp_paper_shaped.json"));
  CHECK_FALSE(continuous.enumerable());
  CHECK_THROWS_AS(true_effects(continuous), EnumerationTooLargeError);
}

TEST_CASE("configuration validation rejects each malformed field") {
  const DgpConfig good = tiny_config();
  good.validate();

  DgpConfig c = good;
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.k = 1;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.binary[0].p = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.u_given_c.resize(1, 2);
  c.u_given_c << 0.1, 0.2;
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.x_given_cu.covariates = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.y_given_xcu.u_offsets = Eigen::Vector3d(0.9, 0.1, 0.0);
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.y_given_xcu.u_offsets = Eigen::Vector2d(0.9, 0.1);  // unpinned reference
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.pi_true(0, 0) = 0.5;  // row no longer sums to one
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.category_names = {"one"};
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);

  c = good;
  c.gaussian = {{0.0, 0.0}};
  CHECK_THROWS_AS(c.validate(), InvalidConfigError);
}
