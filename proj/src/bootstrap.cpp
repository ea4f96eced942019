#include "proxest/bootstrap.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <vector>

#include "proxest/errors.hpp"
#include "proxest/parallel.hpp"

namespace proxest {

void BootstrapPlan::validate() const {
  if (r_analysis < 0 || r_validation < 0) {
    throw InvalidConfigError("replicate counts cannot be negative");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw InvalidConfigError("confidence must lie strictly between 0 and 1");
  }
  if (estimator == Method::oracle) {
    throw InvalidConfigError("the oracle estimator is not bootstrapped");
  }
  if (threads < 0) throw InvalidConfigError("thread count cannot be negative");
}

int BootstrapPlan::resolved_analysis() const {
  if (mode == BootstrapMode::validation) return 1;
  if (r_analysis > 0) return r_analysis;
  return mode == BootstrapMode::both ? 10 : 100;
}

int BootstrapPlan::resolved_validation() const {
  if (mode == BootstrapMode::analysis) return 1;
  if (r_validation > 0) return r_validation;
  return mode == BootstrapMode::both ? 10 : 100;
}

long BootstrapPlan::total_replicates() const {
  return static_cast<long>(resolved_analysis()) * resolved_validation();
}

Cohort resample_cohort(const Cohort& cohort, Rng& rng) {
  const long n = cohort.n();
  if (n < 1) throw InsufficientDataError("cannot resample an empty cohort");
  std::vector<long> rows(n);
  for (long i = 0; i < n; ++i) {
    rows[i] = static_cast<long>(rng.uniform_below(static_cast<std::size_t>(n)));
  }
  return cohort.subset(rows);
}

ConfusionCounts resample_confusion(const ConfusionCounts& counts, Rng& rng) {
  const int k = counts.k();
  const long total = counts.total();
  if (total < 1) throw InsufficientDataError("cannot resample an empty confusion matrix");

  // prefix sums over the flattened cells give an exact unit-record resample
  std::vector<long> prefix;
  prefix.reserve(static_cast<size_t>(k) * k);
  long running = 0;
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      running += counts.counts(r, c);
      prefix.push_back(running);
    }
  }

  ConfusionCounts out;
  out.counts = Eigen::MatrixXi::Zero(k, k);
  for (long draw = 0; draw < total; ++draw) {
    const long unit = static_cast<long>(rng.uniform_below(static_cast<std::size_t>(total)));
    const auto it = std::upper_bound(prefix.begin(), prefix.end(), unit);
    const long cell = it - prefix.begin();
    out.counts(static_cast<int>(cell / k), static_cast<int>(cell % k)) += 1;
  }
  return out;
}

namespace {

IntervalEstimate make_interval(double point, std::vector<double> values,
                               double confidence, BootstrapMode mode,
                               bool keep) {
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - confidence) / 2.0;
  IntervalEstimate interval;
  interval.point = point;
  interval.lower = percentile(values, tail);
  interval.upper = percentile(values, 1.0 - tail);
  interval.n_replicates = static_cast<long>(values.size());
  interval.mode = mode;
  if (keep) interval.replicate_values = std::move(values);
  return interval;
}

}  // namespace

BootstrapResult run_bootstrap(const Cohort& cohort, const ConfusionCounts& counts,
                              const BootstrapPlan& plan,
                              const AdjustOptions& options,
                              const SimexConfig& simex) {
  plan.validate();
  cohort.validate();
  if (counts.k() != cohort.k) {
    throw DimensionMismatchError("confusion matrix does not match cohort categories");
  }

  const MisclassificationModel base_model =
      row_normalize(counts, options.smoothing_alpha);

  CausalEstimate point;
  if (plan.estimator == Method::mc_simex) {
    point = mc_simex(cohort, base_model, simex, options).first;
  } else {
    point = estimate_effects(cohort, base_model, plan.estimator, options).estimate;
  }

  const int r_analysis = plan.resolved_analysis();
  const int r_validation = plan.resolved_validation();
  const long total = plan.total_replicates();
  const SeedStream root = SeedStream::root(plan.seed)
                              .derive("bootstrap")
                              .derive(bootstrap_mode_name(plan.mode));

  // Count resamples are drawn once and crossed with every cohort resample.
  // A slot left empty records a replicate dropped at normalization.
  std::vector<std::optional<MisclassificationModel>> models(r_validation);
  if (plan.mode == BootstrapMode::analysis) {
    models[0] = base_model;
  } else {
    const SeedStream counts_stream = root.derive("counts");
    for (int v = 0; v < r_validation; ++v) {
      Rng rng(counts_stream.derive(static_cast<std::uint64_t>(v)));
      const ConfusionCounts resampled = resample_confusion(counts, rng);
      try {
        models[v] = row_normalize(resampled, options.smoothing_alpha);
      } catch (const NumericError&) {
        // empty or singular resampled rows leave the slot empty
      }
    }
  }

  Eigen::MatrixXd replicates(total, 2);
  std::vector<char> survived(total, 0);
  const SeedStream cohort_stream = root.derive("cohort");
  const SeedStream simex_stream = root.derive("simex");

  parallel_for(r_analysis, plan.threads, [&](long a) {
    Cohort draw;
    if (plan.mode == BootstrapMode::validation) {
      draw = cohort;
    } else {
      Rng rng(cohort_stream.derive(static_cast<std::uint64_t>(a)));
      draw = resample_cohort(cohort, rng);
    }

    // Any numeric failure or resampling-induced data degeneracy drops the
    // replicate; only the survivors feed the interval. The original-data
    // point estimate above still propagates every error.
    std::unique_ptr<NuisancePredictor> pred;
    long dropped_rows = 0;
    if (plan.estimator != Method::mc_simex) {
      try {
        const Cohort applied =
            apply_missing_policy(draw, options.missing, &dropped_rows);
        pred = make_nuisance(applied, options.backend, options.nuisance());
      } catch (const NumericError&) {
        return;  // all slots for this cohort draw stay dropped
      } catch (const DataError&) {
        return;
      }
    }

    for (int v = 0; v < r_validation; ++v) {
      const long slot = a * r_validation + v;
      if (!models[v].has_value()) continue;
      try {
        CausalEstimate est;
        if (plan.estimator == Method::mc_simex) {
          SimexConfig cfg = simex;
          cfg.seed = simex_stream.derive(static_cast<std::uint64_t>(a))
                         .derive(static_cast<std::uint64_t>(v))
                         .state;
          cfg.threads = 1;  // parallelism lives at the replicate level
          est = mc_simex(draw, *models[v], cfg, options).first;
        } else if (plan.estimator == Method::naive) {
          est = estimate_from_predictor(
                    *pred, Eigen::MatrixXd::Identity(cohort.k, cohort.k),
                    Method::naive, options)
                    .estimate;
        } else {
          est = estimate_from_predictor(*pred, models[v]->m_inverse,
                                        Method::matrix_adjust, options)
                    .estimate;
        }
        replicates(slot, 0) = est.risk_ratio;
        replicates(slot, 1) = est.odds_ratio;
        survived[slot] = 1;
      } catch (const NumericError&) {
      } catch (const DataError&) {
      }
    }
  });

  std::vector<double> rr_values, or_values;
  rr_values.reserve(total);
  or_values.reserve(total);
  for (long slot = 0; slot < total; ++slot) {
    if (!survived[slot]) continue;
    rr_values.push_back(replicates(slot, 0));
    or_values.push_back(replicates(slot, 1));
  }
  const long n_survived = static_cast<long>(rr_values.size());
  const long n_dropped = total - n_survived;
  if (n_dropped * 2 > total) {
    throw TooFewReplicatesError("more than half of the bootstrap replicates failed (" +
                                std::to_string(n_dropped) + " of " +
                                std::to_string(total) + ")");
  }

  BootstrapResult result;
  result.point = point;
  result.risk_ratio = make_interval(point.risk_ratio, std::move(rr_values),
                                    plan.confidence, plan.mode, plan.keep_replicates);
  result.odds_ratio = make_interval(point.odds_ratio, std::move(or_values),
                                    plan.confidence, plan.mode, plan.keep_replicates);
  result.n_requested = total;
  result.n_survived = n_survived;
  result.n_dropped = n_dropped;
  result.mode = plan.mode;
  result.seed = plan.seed;
  return result;
}

}  // namespace proxest
