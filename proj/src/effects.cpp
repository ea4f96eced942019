#include "proxest/effects.hpp"

#include <cmath>
#include <limits>

#include "proxest/errors.hpp"

namespace proxest {

std::string method_name(Method m) {
  switch (m) {
    case Method::naive: return "naive";
    case Method::oracle: return "oracle";
    case Method::matrix_adjust: return "matrix-adjust";
    case Method::mc_simex: return "mc-simex";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "naive") return Method::naive;
  if (name == "oracle") return Method::oracle;
  if (name == "matrix_adjust" || name == "matrix-adjust") return Method::matrix_adjust;
  if (name == "mc_simex" || name == "mc-simex") return Method::mc_simex;
  throw InvalidConfigError("unknown method '" + name + "'");
}

std::string bootstrap_mode_name(BootstrapMode m) {
  switch (m) {
    case BootstrapMode::analysis: return "analysis";
    case BootstrapMode::validation: return "validation";
    case BootstrapMode::both: return "both";
  }
  return "unknown";
}

BootstrapMode bootstrap_mode_from_name(const std::string& name) {
  if (name == "analysis") return BootstrapMode::analysis;
  if (name == "validation") return BootstrapMode::validation;
  if (name == "both") return BootstrapMode::both;
  throw InvalidConfigError("unknown bootstrap mode '" + name + "'");
}

EffectRatios effects_from_risks(double risk_treated, double risk_control) {
  if (risk_treated < 0.0 || risk_treated > 1.0 || risk_control < 0.0 ||
      risk_control > 1.0)
    throw DataError("risks must lie in [0, 1]");

  EffectRatios out;
  const double inf = std::numeric_limits<double>::infinity();
  if (risk_treated <= 0.0 || risk_treated >= 1.0 || risk_control <= 0.0 ||
      risk_control >= 1.0) {
    out.degenerate = true;
    out.risk_ratio = risk_control > 0.0 ? risk_treated / risk_control
                                        : (risk_treated > 0.0 ? inf : 1.0);
    const double odds_t = risk_treated >= 1.0 ? inf : risk_treated / (1.0 - risk_treated);
    const double odds_c = risk_control >= 1.0 ? inf : risk_control / (1.0 - risk_control);
    if (odds_c == 0.0)
      out.odds_ratio = odds_t > 0.0 ? inf : 1.0;
    else if (std::isinf(odds_c))
      out.odds_ratio = std::isinf(odds_t) ? 1.0 : 0.0;
    else
      out.odds_ratio = odds_t / odds_c;
    return out;
  }
  out.risk_ratio = risk_treated / risk_control;
  out.odds_ratio =
      (risk_treated * (1.0 - risk_control)) / ((1.0 - risk_treated) * risk_control);
  return out;
}

CausalEstimate CausalEstimate::from_risks(double treated, double control,
                                          Method method, double clamped_mass) {
  CausalEstimate est;
  est.risk_treated = treated;
  est.risk_control = control;
  const EffectRatios ratios = effects_from_risks(treated, control);
  est.risk_ratio = ratios.risk_ratio;
  est.odds_ratio = ratios.odds_ratio;
  est.degenerate = ratios.degenerate;
  est.clamped_mass = clamped_mass;
  est.method = method;
  return est;
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("percentile of empty sample");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace proxest
