#include "proxest/adjust.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "proxest/errors.hpp"
#include "proxest/stochastic.hpp"

namespace proxest {

namespace {

struct CellRecovery {
  Eigen::MatrixXd g;  // 2 x K, p(Y=1 | X=x, U=u, C_cell)
  Eigen::VectorXd w;  // p(U = . | C_cell)
  RecoveredJoint joint;
  double marginal_clamped = 0.0;
};

// zero out negative entries and renormalize; returns the removed mass
double clamp_and_renormalize(Eigen::Ref<Eigen::MatrixXd> table) {
  double removed = 0.0;
  for (long i = 0; i < table.rows(); ++i) {
    for (long j = 0; j < table.cols(); ++j) {
      if (table(i, j) < 0.0) {
        removed -= table(i, j);
        table(i, j) = 0.0;
      }
    }
  }
  const double total = table.sum();
  if (total <= 0.0) {
    throw DegenerateCellError("recovered table has no positive mass");
  }
  table /= total;
  return removed;
}

CellRecovery recover_cell(const NuisancePredictor& pred,
                          const Eigen::MatrixXd& m_inverse, long cell,
                          const AdjustOptions& options) {
  const int k = pred.k();
  const double px1 = pred.propensity(cell);
  const double px[2] = {1.0 - px1, px1};

  // proxy joint s[y*2+x][u*] = p(y|x,u*,C) p(u*|x,C) p(x|C)
  Eigen::MatrixXd s(4, k);
  Eigen::MatrixXd mixed_proxy(2, k);
  for (int x = 0; x < 2; ++x) {
    const Eigen::VectorXd pu = pred.proxy_distribution(cell, x);
    mixed_proxy.row(x) = pu.transpose() * px[x];
    for (int u = 0; u < k; ++u) {
      const double p1 = pred.outcome_probability(cell, x, u);
      s(2 + x, u) = p1 * pu(u) * px[x];
      s(x, u) = (1.0 - p1) * pu(u) * px[x];
    }
  }

  CellRecovery out;
  out.joint.table = s * m_inverse.transpose();  // applies M^-1 to each u-slice
  out.joint.clamped_mass = clamp_and_renormalize(out.joint.table);
  if (out.joint.clamped_mass > options.clamp_error_threshold) {
    throw ExcessiveClampingError(
        "recovered joint at cell " + std::to_string(cell) + " lost " +
        std::to_string(out.joint.clamped_mass) + " probability mass");
  }

  // marginal over treatment arms collapses to one inverse application
  Eigen::MatrixXd w_raw =
      (m_inverse * (mixed_proxy.row(0) + mixed_proxy.row(1)).transpose());
  out.marginal_clamped = clamp_and_renormalize(w_raw);
  out.w = w_raw.col(0);

  out.g.resize(2, k);
  for (int x = 0; x < 2; ++x) {
    for (int u = 0; u < k; ++u) {
      const double den = out.joint.q(0, x, u) + out.joint.q(1, x, u);
      if (den < options.degenerate_denominator) {
        if (out.w(u) > options.degenerate_weight_floor) {
          throw DegenerateCellError(
              "cell " + std::to_string(cell) + " category " + std::to_string(u) +
              " arm " + std::to_string(x) + " has no recovered mass");
        }
        out.g(x, u) = 0.0;
      } else {
        out.g(x, u) = out.joint.q(1, x, u) / den;
      }
    }
  }
  return out;
}

void check_dimensions(const NuisancePredictor& pred,
                      const Eigen::MatrixXd& m_inverse) {
  if (m_inverse.rows() != pred.k() || m_inverse.cols() != pred.k()) {
    throw DimensionMismatchError("inverse matrix does not match category count");
  }
}

}  // namespace

RecoveredJoint recovered_joint(const NuisancePredictor& pred,
                               const Eigen::MatrixXd& m_inverse, long cell,
                               const AdjustOptions& options) {
  check_dimensions(pred, m_inverse);
  return recover_cell(pred, m_inverse, cell, options).joint;
}

RecoveredMarginal marginal_u(const NuisancePredictor& pred,
                             const Eigen::MatrixXd& m_inverse, long cell,
                             const AdjustOptions& options) {
  check_dimensions(pred, m_inverse);
  const CellRecovery rec = recover_cell(pred, m_inverse, cell, options);
  return {rec.w, rec.marginal_clamped};
}

RecoveryAccumulation accumulate_recovery(const NuisancePredictor& pred,
                                         const Eigen::MatrixXd& m_inverse,
                                         const AdjustOptions& options) {
  check_dimensions(pred, m_inverse);
  const int k = pred.k();
  const long cells = pred.cells();
  std::vector<KahanSum> risk_mass(2 * k);
  std::vector<KahanSum> u_mass(k);
  KahanSum clamped;

  for (long cell = 0; cell < cells; ++cell) {
    const double weight = pred.weight(cell);
    const CellRecovery rec = recover_cell(pred, m_inverse, cell, options);
    for (int u = 0; u < k; ++u) {
      const double wu = weight * rec.w(u);
      u_mass[u].add(wu);
      risk_mass[u].add(rec.g(0, u) * wu);
      risk_mass[k + u].add(rec.g(1, u) * wu);
    }
    clamped.add(weight * (rec.joint.clamped_mass + rec.marginal_clamped));
  }

  RecoveryAccumulation acc;
  acc.risk_mass.resize(2, k);
  acc.u_mass.resize(k);
  for (int u = 0; u < k; ++u) {
    acc.risk_mass(0, u) = risk_mass[u].value();
    acc.risk_mass(1, u) = risk_mass[k + u].value();
    acc.u_mass(u) = u_mass[u].value();
  }
  acc.clamped_mass = clamped.value();
  acc.cells = cells;
  return acc;
}

namespace {

double clamp01(double v) { return std::min(std::max(v, 0.0), 1.0); }

double risk_from_accumulation(const RecoveryAccumulation& acc, int x) {
  KahanSum sum;
  for (long u = 0; u < acc.u_mass.size(); ++u) sum.add(acc.risk_mass(x, u));
  return clamp01(sum.value());
}

}  // namespace

double counterfactual_risk(const NuisancePredictor& pred,
                           const Eigen::MatrixXd& m_inverse, int x,
                           const AdjustOptions& options) {
  if (x != 0 && x != 1) throw InvalidConfigError("treatment arm must be 0 or 1");
  return risk_from_accumulation(accumulate_recovery(pred, m_inverse, options), x);
}

double subgroup_risk_ratio(const NuisancePredictor& pred,
                           const Eigen::MatrixXd& m_inverse, int u,
                           const AdjustOptions& options) {
  if (u < 0 || u >= pred.k()) {
    throw InvalidConfigError("subgroup category out of range");
  }
  const RecoveryAccumulation acc = accumulate_recovery(pred, m_inverse, options);
  if (acc.u_mass(u) <= options.degenerate_weight_floor) {
    throw EmptySubgroupError("recovered weight of category " + std::to_string(u) +
                             " is below the floor");
  }
  const double r1 = clamp01(acc.risk_mass(1, u) / acc.u_mass(u));
  const double r0 = clamp01(acc.risk_mass(0, u) / acc.u_mass(u));
  return effects_from_risks(r1, r0).risk_ratio;
}

EstimateReport estimate_from_predictor(const NuisancePredictor& pred,
                                       const Eigen::MatrixXd& m_inverse,
                                       Method method,
                                       const AdjustOptions& options) {
  const RecoveryAccumulation acc = accumulate_recovery(pred, m_inverse, options);
  EstimateReport report;
  report.estimate = CausalEstimate::from_risks(risk_from_accumulation(acc, 1),
                                               risk_from_accumulation(acc, 0),
                                               method, acc.clamped_mass);
  report.rows_used = pred.cells();
  const int k = pred.k();
  report.subgroups.reserve(k);
  for (int u = 0; u < k; ++u) {
    SubgroupEffect sub;
    sub.category = u;
    sub.weight = acc.u_mass(u);
    if (sub.weight <= options.degenerate_weight_floor) {
      sub.degenerate = true;
      sub.risk_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      sub.risk_treated = clamp01(acc.risk_mass(1, u) / sub.weight);
      sub.risk_control = clamp01(acc.risk_mass(0, u) / sub.weight);
      const EffectRatios ratios = effects_from_risks(sub.risk_treated, sub.risk_control);
      sub.risk_ratio = ratios.risk_ratio;
      sub.degenerate = ratios.degenerate;
    }
    report.subgroups.push_back(sub);
  }
  return report;
}

EstimateReport estimate_effects(const Cohort& cohort,
                                const MisclassificationModel& mis, Method method,
                                const AdjustOptions& options) {
  cohort.validate();
  if (method == Method::mc_simex) {
    throw InvalidConfigError("mc-simex runs through its own entry point");
  }

  long dropped = 0;
  Cohort working;
  Eigen::MatrixXd m_inverse;
  if (method == Method::oracle) {
    if (!cohort.has_truth()) {
      throw MissingTruthError("oracle estimator needs true labels");
    }
    working = cohort;
    working.u_star = cohort.u_true;
    m_inverse = Eigen::MatrixXd::Identity(cohort.k, cohort.k);
  } else {
    working = apply_missing_policy(cohort, options.missing, &dropped);
    if (method == Method::naive) {
      m_inverse = Eigen::MatrixXd::Identity(cohort.k, cohort.k);
    } else {
      if (mis.k() != cohort.k) {
        throw DimensionMismatchError("misclassification matrix does not match cohort");
      }
      m_inverse = mis.m_inverse;
    }
  }

  const std::unique_ptr<NuisancePredictor> pred =
      make_nuisance(working, options.backend, options.nuisance());
  EstimateReport report = estimate_from_predictor(*pred, m_inverse, method, options);
  report.dropped_rows = dropped;
  return report;
}

}  // namespace proxest
