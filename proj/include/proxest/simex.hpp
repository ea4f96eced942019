#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "proxest/adjust.hpp"
#include "proxest/rng.hpp"

namespace proxest {

enum class SimexScale { log_scale, linear };

struct SimexConfig {
  std::vector<double> lambda_grid{0.5, 1.0, 1.5, 2.0};
  int b_per_lambda = 100;
  int extrapolant_degree = 2;
  SimexScale scale = SimexScale::log_scale;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

// Per-noise-level record of the simulation phase plus the fitted
// extrapolation. Index 0 is always the unperturbed λ=0 point.
struct SimexTrace {
  std::vector<double> lambdas;
  std::vector<double> mean_risk_treated, mean_risk_control;
  std::vector<double> mean_risk_ratio, mean_odds_ratio;
  std::vector<double> sd_risk_treated, sd_risk_control;
  std::vector<double> sd_risk_ratio, sd_odds_ratio;
  // polynomial coefficients (ascending degree) on the extrapolation scale
  Eigen::VectorXd coef_risk_treated, coef_risk_control;
  CausalEstimate extrapolated;
};

// pi^lambda through the eigendecomposition; requires real positive
// eigenvalues. Entries only slightly negative (< 1e-10) are zeroed and rows
// renormalized; anything more negative is an error.
Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& pi, double lambda);

// resamples each label from pi_lambda row u; missing labels stay missing
Eigen::VectorXi perturb_labels(const Eigen::VectorXi& u_star,
                               const Eigen::MatrixXd& pi_lambda, Rng& rng);

// least-squares polynomial through (lambda, value) points, evaluated at -1
double extrapolate(const std::vector<std::pair<double, double>>& points,
                   int degree);
// same fit on log(value), exponentiated; values must be strictly positive
double extrapolate_log(const std::vector<std::pair<double, double>>& points,
                       int degree);
// ascending-degree coefficients of the least-squares polynomial
Eigen::VectorXd extrapolation_coefficients(
    const std::vector<std::pair<double, double>>& points, int degree);

std::pair<CausalEstimate, SimexTrace> mc_simex(const Cohort& cohort,
                                               const MisclassificationModel& mis,
                                               const SimexConfig& config,
                                               const AdjustOptions& options = {});

}  // namespace proxest
