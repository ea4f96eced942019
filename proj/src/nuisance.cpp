#include "proxest/nuisance.hpp"

#include <cstring>
#include <string>
#include <unordered_map>

#include "proxest/errors.hpp"
#include "proxest/stochastic.hpp"

namespace proxest {

namespace {

double clamp_probability(double p) {
  return std::min(std::max(p, kProbFloor), 1.0 - kProbFloor);
}

}  // namespace

NuisanceModels::NuisanceModels(LogisticModel outcome, MultinomialModel proxy,
                               LogisticModel propensity, DesignSpec out_spec,
                               DesignSpec prox_spec, DesignSpec prop_spec,
                               const Cohort& cohort)
    : outcome_model(std::move(outcome)),
      proxy_model(std::move(proxy)),
      propensity_model(std::move(propensity)),
      outcome_spec(out_spec),
      proxy_spec(prox_spec),
      propensity_spec(prop_spec),
      rows_used(cohort.n()),
      n_(cohort.n()),
      k_(cohort.k) {
  const int p = cohort.p();
  const Eigen::VectorXd& b = outcome_model.coefficients;
  outcome_base_ = Eigen::VectorXd::Constant(n_, b(0));
  if (p > 0) outcome_base_ += cohort.c * b.tail(p);
  outcome_x_coef_ = b(1);
  outcome_u_coef_ = Eigen::VectorXd::Zero(k_);
  const int ref = outcome_spec.reference_category;
  for (int j = 0; j < k_; ++j) {
    if (j == ref) continue;
    outcome_u_coef_(j) = b(2 + (j < ref ? j : j - 1));
  }

  proxy_base_.resize(n_, k_ - 1);
  proxy_x_coef_.resize(k_ - 1);
  for (int r = 0; r < k_ - 1; ++r) {
    const Eigen::RowVectorXd a = proxy_model.coefficients.row(r);
    proxy_base_.col(r).setConstant(a(0));
    if (p > 0) proxy_base_.col(r) += cohort.c * a.tail(p).transpose();
    proxy_x_coef_(r) = a(1);
  }

  const Eigen::VectorXd& g = propensity_model.coefficients;
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n_, g(0));
  if (p > 0) eta += cohort.c * g.tail(p);
  propensity_prob_.resize(n_);
  for (long i = 0; i < n_; ++i) {
    propensity_prob_(i) = clamp_probability(sigmoid(eta(i)));
  }
}

double NuisanceModels::outcome_probability(long cell, int x, int u) const {
  if (u < 0 || u >= k_) throw DataError("category label out of range");
  const double eta = outcome_base_(cell) + x * outcome_x_coef_ + outcome_u_coef_(u);
  return clamp_probability(sigmoid(eta));
}

Eigen::VectorXd NuisanceModels::proxy_distribution(long cell, int x) const {
  if (k_ == 1) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(k_);
  for (int r = 0; r < k_ - 1; ++r) {
    logits(proxy_model.row_category(r)) =
        proxy_base_(cell, r) + x * proxy_x_coef_(r);
  }
  Eigen::VectorXd probs = softmax(logits);
  for (int j = 0; j < k_; ++j) probs(j) = std::max(probs(j), kProbFloor);
  probs /= probs.sum();
  return probs;
}

double NuisanceModels::propensity(long cell) const {
  return propensity_prob_(cell);
}

bool NuisanceModels::all_converged() const {
  return outcome_model.converged && propensity_model.converged &&
         (k_ == 1 || proxy_model.converged);
}

NuisanceModels fit_nuisance(const Cohort& cohort, const NuisanceOptions& options) {
  cohort.validate();
  if (cohort.missing_proxy_count() > 0) {
    throw DataError("cohort has missing proxy labels; apply a policy first");
  }
  const long n = cohort.n();
  if (n < 1) throw InsufficientDataError("cohort is empty");
  const long treated = cohort.x.cast<long>().sum();
  if (treated == 0 || treated == n) {
    throw InsufficientDataError("a treatment arm is empty");
  }

  const int k = cohort.k;
  const int p = cohort.p();
  const int ref = resolve_reference(options.reference_category, k);
  const DesignSpec out_spec = outcome_design_spec(k, p, ref);
  const DesignSpec prox_spec = proxy_design_spec(p);
  const DesignSpec prop_spec = propensity_design_spec(p);

  LogisticModel propensity =
      fit_logistic(build_design(prop_spec, cohort), cohort.x, options.glm);
  MultinomialModel proxy;
  if (k >= 2) {
    proxy = fit_multinomial(build_design(prox_spec, cohort), cohort.u_star, k,
                            ref, options.glm);
  } else {
    proxy.k = 1;
    proxy.reference = 0;
    proxy.coefficients.resize(0, prox_spec.width());
    proxy.converged = true;
  }
  LogisticModel outcome =
      fit_logistic(build_design(out_spec, cohort), cohort.y, options.glm);

  NuisanceModels models(std::move(outcome), std::move(proxy),
                        std::move(propensity), out_spec, prox_spec, prop_spec,
                        cohort);
  if (options.require_convergence && !models.all_converged()) {
    throw IllConditionedFitError("a nuisance model did not converge");
  }
  return models;
}

FrequencyNuisance::FrequencyNuisance(const Cohort& cohort, int max_patterns) {
  cohort.validate();
  if (cohort.missing_proxy_count() > 0) {
    throw DataError("cohort has missing proxy labels; apply a policy first");
  }
  const long n = cohort.n();
  if (n < 1) throw InsufficientDataError("cohort is empty");
  k_ = cohort.k;
  const int p = cohort.p();

  // exact-byte pattern keys; discrete covariates repeat bit-identically
  std::unordered_map<std::string, int> index;
  std::vector<long> row_pattern(n);
  for (long i = 0; i < n; ++i) {
    std::string key(static_cast<size_t>(p) * sizeof(double), '\0');
    for (int j = 0; j < p; ++j) {
      const double v = cohort.c(i, j);
      std::memcpy(key.data() + j * sizeof(double), &v, sizeof(double));
    }
    auto [it, inserted] = index.emplace(key, static_cast<int>(index.size()));
    if (inserted && static_cast<int>(index.size()) > max_patterns) {
      throw DataError("too many distinct covariate patterns for the frequency backend");
    }
    row_pattern[i] = it->second;
  }

  const long cells = static_cast<long>(index.size());
  std::vector<double> total(cells, 0.0), treated(cells, 0.0);
  std::vector<std::array<double, 2>> arm_count(cells, {0.0, 0.0});
  proxy_.assign(cells, {Eigen::VectorXd::Zero(k_), Eigen::VectorXd::Zero(k_)});
  std::vector<std::array<Eigen::VectorXd, 2>> cell_count(
      cells, {Eigen::VectorXd::Zero(k_), Eigen::VectorXd::Zero(k_)});
  std::vector<std::array<Eigen::VectorXd, 2>> cell_events(
      cells, {Eigen::VectorXd::Zero(k_), Eigen::VectorXd::Zero(k_)});

  for (long i = 0; i < n; ++i) {
    const long cell = row_pattern[i];
    const int x = cohort.x(i);
    const int u = cohort.u_star(i);
    total[cell] += 1.0;
    treated[cell] += x;
    arm_count[cell][x] += 1.0;
    proxy_[cell][x](u) += 1.0;
    cell_count[cell][x](u) += 1.0;
    cell_events[cell][x](u) += cohort.y(i);
  }

  pattern_weight_.resize(cells);
  propensity_.resize(cells);
  outcome_.assign(cells, {Eigen::VectorXd::Zero(k_), Eigen::VectorXd::Zero(k_)});
  for (long cell = 0; cell < cells; ++cell) {
    pattern_weight_[cell] = total[cell] / static_cast<double>(n);
    propensity_[cell] = clamp_probability(treated[cell] / total[cell]);
    for (int x = 0; x < 2; ++x) {
      if (arm_count[cell][x] > 0.0) {
        proxy_[cell][x] /= arm_count[cell][x];
      } else {
        proxy_[cell][x].setConstant(1.0 / k_);
      }
      for (int u = 0; u < k_; ++u) {
        const double c = cell_count[cell][x](u);
        outcome_[cell][x](u) =
            c > 0.0 ? clamp_probability(cell_events[cell][x](u) / c) : 0.5;
      }
    }
  }
}

double FrequencyNuisance::outcome_probability(long cell, int x, int u) const {
  if (u < 0 || u >= k_) throw DataError("category label out of range");
  return outcome_[cell][x](u);
}

Eigen::VectorXd FrequencyNuisance::proxy_distribution(long cell, int x) const {
  return proxy_[cell][x];
}

double FrequencyNuisance::propensity(long cell) const {
  return propensity_[cell];
}

std::unique_ptr<NuisancePredictor> make_nuisance(const Cohort& cohort,
                                                 NuisanceBackend backend,
                                                 const NuisanceOptions& options) {
  if (backend == NuisanceBackend::frequency) {
    return std::make_unique<FrequencyNuisance>(cohort);
  }
  return std::make_unique<NuisanceModels>(fit_nuisance(cohort, options));
}

}  // namespace proxest
