#pragma once

#include <string>
#include <vector>

namespace proxest {

enum class Method { naive, oracle, matrix_adjust, mc_simex };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Risk ratio and odds ratio from the two counterfactual risks. When a risk
// sits exactly on 0 or 1 the ratios are not finite numbers; `degenerate` is
// raised and the fields carry the limiting value (0 or +inf) instead.
struct EffectRatios {
  double risk_ratio = 1.0;
  double odds_ratio = 1.0;
  bool degenerate = false;
};

EffectRatios effects_from_risks(double risk_treated, double risk_control);

// Point estimate of a causal contrast, with the recovery diagnostic.
// risk_ratio / odds_ratio are always recomputed from the two risks.
struct CausalEstimate {
  double risk_treated = 0.0;
  double risk_control = 0.0;
  double risk_ratio = 1.0;
  double odds_ratio = 1.0;
  bool degenerate = false;       // a risk hit exactly 0 or 1
  double clamped_mass = 0.0;     // mean per-unit negative mass clamped in recovery
  Method method = Method::naive;

  static CausalEstimate from_risks(double treated, double control, Method method,
                                   double clamped_mass = 0.0);
};

enum class BootstrapMode { analysis, validation, both };

std::string bootstrap_mode_name(BootstrapMode m);
BootstrapMode bootstrap_mode_from_name(const std::string& name);

// Percentile interval around a point estimate.
struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  long n_replicates = 0;  // surviving replicates the quantiles were taken over
  BootstrapMode mode = BootstrapMode::analysis;
  std::vector<double> replicate_values;
};

// Linear interpolation between order statistics (R type-7). `sorted` must be
// ascending and nonempty.
double percentile(const std::vector<double>& sorted, double q);

}  // namespace proxest
