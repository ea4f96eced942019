#pragma once

#include <vector>

#include <Eigen/Dense>

#include "proxest/cohort.hpp"
#include "proxest/confusion.hpp"
#include "proxest/effects.hpp"
#include "proxest/nuisance.hpp"

namespace proxest {

struct AdjustOptions {
  NuisanceBackend backend = NuisanceBackend::glm;
  GlmOptions glm;
  int reference_category = -1;  // -1 resolves to K-1
  MissingLabelPolicy missing;
  // Outcome-share denominators below this are degenerate when the category
  // carries weight above the floor; otherwise the cell contributes nothing.
  double degenerate_denominator = 1e-12;
  double degenerate_weight_floor = 1e-6;
  // per-cell recovered mass clamped away before renormalization
  double clamp_error_threshold = 0.25;
  double smoothing_alpha = 0.0;  // Dirichlet smoothing when counts are rebuilt
  bool require_convergence = true;

  NuisanceOptions nuisance() const {
    NuisanceOptions opts;
    opts.glm = glm;
    opts.reference_category = reference_category;
    opts.require_convergence = require_convergence;
    return opts;
  }
};

// Recovered joint p(Y, X, U | C_cell) after multiplying the proxy joint by
// the inverse misclassification matrix, clamping negatives, and
// renormalizing. Rows index (y, x) pairs as y*2 + x.
struct RecoveredJoint {
  Eigen::MatrixXd table;  // 4 x K
  double clamped_mass = 0.0;
  double q(int y, int x, int u) const { return table(y * 2 + x, u); }
};

struct RecoveredMarginal {
  Eigen::VectorXd w;  // p(U = . | C_cell)
  double clamped_mass = 0.0;
};

RecoveredJoint recovered_joint(const NuisancePredictor& pred,
                               const Eigen::MatrixXd& m_inverse, long cell,
                               const AdjustOptions& options = {});
RecoveredMarginal marginal_u(const NuisancePredictor& pred,
                             const Eigen::MatrixXd& m_inverse, long cell,
                             const AdjustOptions& options = {});

// Weighted accumulation over all cells of one recovery pass:
//   risk_mass(x, u) = sum_i weight_i * p(Y=1 | X=x, U=u, C_i) * p(U=u | C_i)
//   u_mass(u)       = sum_i weight_i * p(U=u | C_i)
// so that risk(x) = risk_mass.row(x).sum() and subgroup risks are
// risk_mass(x, u) / u_mass(u). Collapsibility holds by construction.
struct RecoveryAccumulation {
  Eigen::MatrixXd risk_mass;  // 2 x K
  Eigen::VectorXd u_mass;     // K
  double clamped_mass = 0.0;  // weighted mean of per-cell clamped mass
  long cells = 0;
};

RecoveryAccumulation accumulate_recovery(const NuisancePredictor& pred,
                                         const Eigen::MatrixXd& m_inverse,
                                         const AdjustOptions& options = {});

// Standardized counterfactual risk P(Y(x) = 1), clamped to [0, 1].
double counterfactual_risk(const NuisancePredictor& pred,
                           const Eigen::MatrixXd& m_inverse, int x,
                           const AdjustOptions& options = {});

// Risk ratio within recovered category u; the category weight must exceed
// the degenerate floor.
double subgroup_risk_ratio(const NuisancePredictor& pred,
                           const Eigen::MatrixXd& m_inverse, int u,
                           const AdjustOptions& options = {});

struct SubgroupEffect {
  int category = 0;
  double risk_treated = 0.0;
  double risk_control = 0.0;
  double risk_ratio = 0.0;
  double weight = 0.0;
  bool degenerate = false;
};

struct EstimateReport {
  CausalEstimate estimate;
  std::vector<SubgroupEffect> subgroups;
  long rows_used = 0;
  long dropped_rows = 0;
};

// Full pipeline for the naive, oracle, and matrix-adjusted estimators. The
// naive path runs the same recovery with an identity inverse; the oracle
// path refits on the true labels. mc-simex lives in simex.hpp.
EstimateReport estimate_effects(const Cohort& cohort,
                                const MisclassificationModel& mis, Method method,
                                const AdjustOptions& options = {});

// Same pipeline on an already-built predictor (no fitting, no row policy).
EstimateReport estimate_from_predictor(const NuisancePredictor& pred,
                                       const Eigen::MatrixXd& m_inverse,
                                       Method method,
                                       const AdjustOptions& options = {});

}  // namespace proxest
