// Shared fixtures for the test binaries: frozen reference values computed
// with an independent enumeration script, finite-difference helpers, and
// random well-conditioned matrix generators. The frozen numbers are inputs
// to the tests, not outputs of the code under test; regenerating them
// requires the external oracle, so change them only with a reason.
#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "proxest/rng.hpp"
#include "proxest/stochastic.hpp"

namespace testing_oracles {

inline std::string data_path(const std::string& name) {
  return std::string(PROXEST_DATA_DIR) + "/" + name;
}

// Exact counterfactual risks for the shipped generating processes,
// enumerated independently of the library.
struct FrozenTruth {
  double risk_treated;
  double risk_control;
  double risk_ratio;
  double odds_ratio;
};

inline constexpr FrozenTruth kTruthK2{0.529186203122, 0.343185657016,
                                      1.541982283649, 2.151160580347};
inline constexpr FrozenTruth kTruthReference{0.216557143329, 0.338418055600,
                                             0.639910134064, 0.540375072834};
inline constexpr FrozenTruth kTruthK4{0.292991172958, 0.397069770317,
                                      0.737883351643, 0.629259723032};

// Population-level limit of the uncorrected estimator on the reference
// process: what infinite data converges to when the proxy is trusted.
inline constexpr FrozenTruth kNaiveLimitReference{
    0.233687173703, 0.318400708424, 0.733940495485, 0.652805622737};

// central finite difference of a scalar function along one coordinate
template <typename F>
double central_difference(F f, Eigen::VectorXd at, int coord, double h = 1e-5) {
  at(coord) += h;
  const double up = f(at);
  at(coord) -= 2.0 * h;
  const double down = f(at);
  return (up - down) / (2.0 * h);
}

// Diagonally dominant row-stochastic matrix; dominance keeps the derived
// adjustment matrix comfortably away from the condition cutoff.
inline Eigen::MatrixXd random_stochastic_matrix(int k, proxest::Rng& rng,
                                                double min_diag = 0.6,
                                                double max_diag = 0.9) {
  Eigen::MatrixXd pi(k, k);
  for (int r = 0; r < k; ++r) {
    const double diag = min_diag + (max_diag - min_diag) * rng.uniform01();
    double rest = 1.0 - diag;
    Eigen::VectorXd cuts(k - 1);
    for (int j = 0; j < k - 1; ++j) cuts(j) = rng.uniform01();
    const double total = cuts.sum();
    int off = 0;
    for (int c = 0; c < k; ++c) {
      if (c == r) {
        pi(r, c) = diag;
      } else {
        pi(r, c) = total > 0.0 ? rest * cuts(off) / total : rest / (k - 1);
        ++off;
      }
    }
  }
  return pi;
}

inline bool approx_equal(double a, double b, double tol) {
  return std::abs(a - b) <= tol;
}

}  // namespace testing_oracles
