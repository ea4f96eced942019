#pragma once

#include <cstdint>

#include "proxest/adjust.hpp"
#include "proxest/confusion.hpp"
#include "proxest/rng.hpp"
#include "proxest/simex.hpp"

namespace proxest {

// Resampling design per the three uncertainty sources: the analysis cohort,
// the validation counts behind the misclassification matrix, or both crossed.
struct BootstrapPlan {
  BootstrapMode mode = BootstrapMode::analysis;
  // 0 means the per-mode default: 100 single-axis replicates, 10 x 10 crossed
  int r_analysis = 0;
  int r_validation = 0;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  Method estimator = Method::matrix_adjust;
  int threads = 1;
  bool keep_replicates = false;

  void validate() const;
  int resolved_analysis() const;
  int resolved_validation() const;
  long total_replicates() const;
};

struct BootstrapResult {
  CausalEstimate point;  // estimate on the original inputs
  IntervalEstimate risk_ratio;
  IntervalEstimate odds_ratio;
  long n_requested = 0;
  long n_survived = 0;
  long n_dropped = 0;
  BootstrapMode mode = BootstrapMode::analysis;
  std::uint64_t seed = 0;
};

// n rows drawn i.i.d. with replacement, all parallel vectors together
Cohort resample_cohort(const Cohort& cohort, Rng& rng);

// unit-record resample of the validation table; the total count is preserved
ConfusionCounts resample_confusion(const ConfusionCounts& counts, Rng& rng);

// Runs the planned design. Replicates that fail — unnormalizable or singular
// resampled counts, refits that do not converge, degenerate recoveries — are
// dropped and counted; percentile intervals are taken over the survivors.
// Errors on the original (unresampled) inputs propagate.
BootstrapResult run_bootstrap(const Cohort& cohort, const ConfusionCounts& counts,
                              const BootstrapPlan& plan,
                              const AdjustOptions& options = {},
                              const SimexConfig& simex = {});

}  // namespace proxest
