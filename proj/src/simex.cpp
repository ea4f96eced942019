#include "proxest/simex.hpp"

#include <cmath>
#include <memory>
#include <set>
#include <string>

#include "proxest/errors.hpp"
#include "proxest/parallel.hpp"
#include "proxest/stochastic.hpp"

namespace proxest {

void SimexConfig::validate() const {
  if (lambda_grid.empty()) throw InvalidConfigError("lambda grid is empty");
  double prev = 0.0;
  for (double lam : lambda_grid) {
    if (!(lam > 0.0)) throw InvalidConfigError("lambda values must be positive");
    if (!(lam > prev)) throw InvalidConfigError("lambda grid must be strictly ascending");
    prev = lam;
  }
  if (b_per_lambda < 1) throw InvalidConfigError("b_per_lambda must be at least 1");
  if (extrapolant_degree < 1) throw InvalidConfigError("extrapolant degree must be at least 1");
  if (extrapolant_degree >= static_cast<int>(lambda_grid.size()) + 1) {
    throw InvalidConfigError("extrapolant degree too high for the lambda grid");
  }
  if (threads < 0) throw InvalidConfigError("thread count cannot be negative");
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& pi, double lambda) {
  if (pi.rows() != pi.cols()) throw DimensionMismatchError("matrix power needs a square matrix");
  if (!(lambda >= 0.0)) throw InvalidConfigError("lambda must be nonnegative");
  if (!is_row_stochastic(pi, 1e-9)) {
    throw InvalidConfigError("matrix power needs a row-stochastic matrix");
  }
  const long k = pi.rows();

  Eigen::EigenSolver<Eigen::MatrixXd> solver(pi);
  if (solver.info() != Eigen::Success) {
    throw NonDiagonalizableError("eigendecomposition did not converge");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  const Eigen::MatrixXcd vectors = solver.eigenvectors();
  Eigen::VectorXcd powered(k);
  for (long i = 0; i < k; ++i) {
    if (std::abs(values(i).imag()) > 1e-9) {
      throw NonPositiveEigenvalueError("complex eigenvalue; fractional power undefined in the reals");
    }
    const double re = values(i).real();
    if (re <= 0.0) {
      throw NonPositiveEigenvalueError("nonpositive eigenvalue; fractional power undefined in the reals");
    }
    powered(i) = std::pow(re, lambda);
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(vectors);
  if (!lu.isInvertible()) {
    throw NonDiagonalizableError("eigenvector matrix is singular");
  }
  const Eigen::MatrixXcd raw = vectors * powered.asDiagonal() * lu.inverse();
  if (raw.imag().cwiseAbs().maxCoeff() > 1e-9) {
    throw NonDiagonalizableError("matrix power has a nonreal component");
  }

  Eigen::MatrixXd result = raw.real();
  for (long i = 0; i < k; ++i) {
    for (long j = 0; j < k; ++j) {
      if (result(i, j) < 0.0) {
        if (result(i, j) < -1e-10) {
          throw StochasticPowerError(
              "fractional power leaves the stochastic matrices: entry (" +
              std::to_string(i) + "," + std::to_string(j) + ") = " +
              std::to_string(result(i, j)));
        }
        result(i, j) = 0.0;
      }
    }
    result.row(i) /= result.row(i).sum();
  }
  return result;
}

Eigen::VectorXi perturb_labels(const Eigen::VectorXi& u_star,
                               const Eigen::MatrixXd& pi_lambda, Rng& rng) {
  if (!is_row_stochastic(pi_lambda, 1e-9)) {
    throw InvalidConfigError("perturbation matrix must be row-stochastic");
  }
  const int k = static_cast<int>(pi_lambda.rows());
  Eigen::VectorXi out(u_star.size());
  for (long i = 0; i < u_star.size(); ++i) {
    const int u = u_star(i);
    if (u == kMissingLabel) {
      out(i) = kMissingLabel;
      continue;
    }
    if (u < 0 || u >= k) throw DataError("label out of range for the perturbation matrix");
    out(i) = rng.categorical(pi_lambda.row(u).transpose());
  }
  return out;
}

namespace {

double eval_poly(const Eigen::VectorXd& coef, double x) {
  double v = 0.0;
  for (long j = coef.size() - 1; j >= 0; --j) v = v * x + coef(j);
  return v;
}

}  // namespace

Eigen::VectorXd extrapolation_coefficients(
    const std::vector<std::pair<double, double>>& points, int degree) {
  if (degree < 1) throw InvalidConfigError("extrapolant degree must be at least 1");
  std::set<double> distinct;
  bool has_zero = false;
  for (const auto& [lam, value] : points) {
    distinct.insert(lam);
    if (lam == 0.0) has_zero = true;
    (void)value;
  }
  if (static_cast<int>(distinct.size()) < degree + 1) {
    throw InvalidConfigError("need at least degree+1 distinct lambda values");
  }
  if (!has_zero) throw InvalidConfigError("extrapolation points must include lambda = 0");

  const long m = static_cast<long>(points.size());
  Eigen::MatrixXd vander(m, degree + 1);
  Eigen::VectorXd values(m);
  for (long i = 0; i < m; ++i) {
    double pow_l = 1.0;
    for (int j = 0; j <= degree; ++j) {
      vander(i, j) = pow_l;
      pow_l *= points[i].first;
    }
    values(i) = points[i].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vander);
  if (qr.rank() < degree + 1) {
    throw IllConditionedFitError("extrapolation design is rank-deficient");
  }
  return qr.solve(values);
}

double extrapolate(const std::vector<std::pair<double, double>>& points,
                   int degree) {
  return eval_poly(extrapolation_coefficients(points, degree), -1.0);
}

double extrapolate_log(const std::vector<std::pair<double, double>>& points,
                       int degree) {
  std::vector<std::pair<double, double>> logged;
  logged.reserve(points.size());
  for (const auto& [lam, value] : points) {
    if (!(value > 0.0)) {
      throw NumericError("log-scale extrapolation needs strictly positive values");
    }
    logged.emplace_back(lam, std::log(value));
  }
  return std::exp(eval_poly(extrapolation_coefficients(logged, degree), -1.0));
}

namespace {

double clamp01(double v) { return std::min(std::max(v, 0.0), 1.0); }

}  // namespace

std::pair<CausalEstimate, SimexTrace> mc_simex(const Cohort& cohort,
                                               const MisclassificationModel& mis,
                                               const SimexConfig& config,
                                               const AdjustOptions& options) {
  config.validate();
  cohort.validate();
  if (mis.k() != cohort.k) {
    throw DimensionMismatchError("misclassification matrix does not match cohort");
  }

  long dropped = 0;
  const Cohort working = apply_missing_policy(cohort, options.missing, &dropped);
  const Eigen::MatrixXd identity =
      Eigen::MatrixXd::Identity(cohort.k, cohort.k);

  const std::unique_ptr<NuisancePredictor> base =
      make_nuisance(working, options.backend, options.nuisance());
  const CausalEstimate naive =
      estimate_from_predictor(*base, identity, Method::naive, options).estimate;

  const int levels = static_cast<int>(config.lambda_grid.size());
  const int b = config.b_per_lambda;
  std::vector<Eigen::MatrixXd> transitions;
  transitions.reserve(levels);
  for (double lam : config.lambda_grid) {
    transitions.push_back(matrix_power(mis.pi, lam));
  }

  // slot per (level, replicate) job so aggregation order is fixed
  Eigen::MatrixXd results(static_cast<long>(levels) * b, 4);
  const SeedStream stream = SeedStream::root(config.seed).derive("simex");
  parallel_for(static_cast<long>(levels) * b, config.threads, [&](long job) {
    const int li = static_cast<int>(job / b);
    const int bi = static_cast<int>(job % b);
    Rng rng(stream.derive(static_cast<std::uint64_t>(li))
                .derive(static_cast<std::uint64_t>(bi)));
    Cohort perturbed = working;
    perturbed.u_star = perturb_labels(working.u_star, transitions[li], rng);
    const std::unique_ptr<NuisancePredictor> pred =
        make_nuisance(perturbed, options.backend, options.nuisance());
    const CausalEstimate est =
        estimate_from_predictor(*pred, identity, Method::naive, options).estimate;
    results(job, 0) = est.risk_treated;
    results(job, 1) = est.risk_control;
    results(job, 2) = est.risk_ratio;
    results(job, 3) = est.odds_ratio;
  });

  SimexTrace trace;
  trace.lambdas.push_back(0.0);
  trace.mean_risk_treated.push_back(naive.risk_treated);
  trace.mean_risk_control.push_back(naive.risk_control);
  trace.mean_risk_ratio.push_back(naive.risk_ratio);
  trace.mean_odds_ratio.push_back(naive.odds_ratio);
  trace.sd_risk_treated.push_back(0.0);
  trace.sd_risk_control.push_back(0.0);
  trace.sd_risk_ratio.push_back(0.0);
  trace.sd_odds_ratio.push_back(0.0);

  for (int li = 0; li < levels; ++li) {
    RunningMean agg[4];
    for (int bi = 0; bi < b; ++bi) {
      const long job = static_cast<long>(li) * b + bi;
      for (int q = 0; q < 4; ++q) agg[q].add(results(job, q));
    }
    trace.lambdas.push_back(config.lambda_grid[li]);
    trace.mean_risk_treated.push_back(agg[0].mean());
    trace.mean_risk_control.push_back(agg[1].mean());
    trace.mean_risk_ratio.push_back(agg[2].mean());
    trace.mean_odds_ratio.push_back(agg[3].mean());
    trace.sd_risk_treated.push_back(agg[0].stddev());
    trace.sd_risk_control.push_back(agg[1].stddev());
    trace.sd_risk_ratio.push_back(agg[2].stddev());
    trace.sd_odds_ratio.push_back(agg[3].stddev());
  }

  // extrapolate the risk pair; ratios are recomputed from the risks, which
  // on the log scale reproduces direct log-RR extrapolation exactly
  std::vector<std::pair<double, double>> pts_treated, pts_control;
  for (size_t i = 0; i < trace.lambdas.size(); ++i) {
    pts_treated.emplace_back(trace.lambdas[i], trace.mean_risk_treated[i]);
    pts_control.emplace_back(trace.lambdas[i], trace.mean_risk_control[i]);
  }
  double risk_treated, risk_control;
  if (config.scale == SimexScale::log_scale) {
    auto logged = [](std::vector<std::pair<double, double>> pts) {
      for (auto& [lam, value] : pts) {
        if (!(value > 0.0)) {
          throw NumericError("log-scale extrapolation needs strictly positive risks");
        }
        value = std::log(value);
      }
      return pts;
    };
    trace.coef_risk_treated =
        extrapolation_coefficients(logged(pts_treated), config.extrapolant_degree);
    trace.coef_risk_control =
        extrapolation_coefficients(logged(pts_control), config.extrapolant_degree);
    risk_treated = std::exp(eval_poly(trace.coef_risk_treated, -1.0));
    risk_control = std::exp(eval_poly(trace.coef_risk_control, -1.0));
  } else {
    trace.coef_risk_treated =
        extrapolation_coefficients(pts_treated, config.extrapolant_degree);
    trace.coef_risk_control =
        extrapolation_coefficients(pts_control, config.extrapolant_degree);
    risk_treated = eval_poly(trace.coef_risk_treated, -1.0);
    risk_control = eval_poly(trace.coef_risk_control, -1.0);
  }

  trace.extrapolated = CausalEstimate::from_risks(
      clamp01(risk_treated), clamp01(risk_control), Method::mc_simex, 0.0);
  return {trace.extrapolated, trace};
}

}  // namespace proxest
