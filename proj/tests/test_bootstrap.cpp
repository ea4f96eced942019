// Bootstrap machinery: plan resolution, resampling laws, interval
// construction, drop accounting, and determinism across seeds and threads.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "proxest/bootstrap.hpp"
#include "proxest/errors.hpp"
#include "proxest/io.hpp"
#include "proxest/synth.hpp"

#include "oracles.hpp"

using namespace proxest;
using namespace testing_oracles;

namespace {

Cohort small_cohort(long n) {
  DgpConfig config = read_dgp_json(data_path("dgp_discrete_k2.json"));
  config.n = n;
  return generate_cohort(config);
}

ConfusionCounts k2_counts() {
  ConfusionCounts counts;
  counts.counts.resize(2, 2);
  counts.counts << 44, 6, 10, 40;
  return counts;
}

}  // namespace

TEST_CASE("plan validation and replicate resolution follow the mode") {
  BootstrapPlan plan;
  plan.validate();
  CHECK(plan.resolved_analysis() == 100);
  CHECK(plan.resolved_validation() == 1);
  CHECK(plan.total_replicates() == 100);

  plan.mode = BootstrapMode::validation;
  CHECK(plan.resolved_analysis() == 1);
  CHECK(plan.resolved_validation() == 100);

  plan.mode = BootstrapMode::both;
  CHECK(plan.resolved_analysis() == 10);
  CHECK(plan.resolved_validation() == 10);
  CHECK(plan.total_replicates() == 100);

  plan.r_analysis = 4;
  plan.r_validation = 3;
  CHECK(plan.total_replicates() == 12);

  BootstrapPlan oracle;
  oracle.estimator = Method::oracle;
  CHECK_THROWS_AS(oracle.validate(), InvalidConfigError);
  BootstrapPlan negative;
  negative.r_analysis = -1;
  CHECK_THROWS_AS(negative.validate(), InvalidConfigError);
  BootstrapPlan confidence;
  confidence.confidence = 1.0;
  CHECK_THROWS_AS(confidence.validate(), InvalidConfigError);
}

TEST_CASE("cohort resampling keeps rows intact and draws with replacement") {
  const long n = 5000;
  Cohort cohort;
  cohort.k = 2;
  cohort.y.resize(n);
  cohort.x.resize(n);
  cohort.u_star.resize(n);
  cohort.u_true.resize(n);
  cohort.c.resize(n, 1);
  for (long i = 0; i < n; ++i) {
    cohort.y(i) = static_cast<int>(i % 2);
    cohort.x(i) = static_cast<int>((i / 2) % 2);
    cohort.u_star(i) = static_cast<int>((i / 4) % 2);
    cohort.u_true(i) = 1 - cohort.u_star(i);
    cohort.c(i, 0) = static_cast<double>(i);
  }

  Rng rng(SeedStream::root(5).derive("resample"));
  const Cohort draw = resample_cohort(cohort, rng);
  REQUIRE(draw.n() == n);
  std::set<long> seen;
  for (long j = 0; j < n; ++j) {
    const long src = static_cast<long>(draw.c(j, 0));
    REQUIRE(src >= 0);
    REQUIRE(src < n);
    seen.insert(src);
    // the whole tuple must travel together
    CHECK(draw.y(j) == static_cast<int>(src % 2));
    CHECK(draw.x(j) == static_cast<int>((src / 2) % 2));
    CHECK(draw.u_star(j) == static_cast<int>((src / 4) % 2));
    CHECK(draw.u_true(j) == 1 - draw.u_star(j));
  }
  // with replacement, the distinct fraction concentrates near 1 - 1/e
  const double unique_fraction =
      static_cast<double>(seen.size()) / static_cast<double>(n);
  CHECK(unique_fraction > 0.60);
  CHECK(unique_fraction < 0.67);
}

TEST_CASE("confusion resampling is a unit-record multinomial with fixed total") {
  ConfusionCounts counts;
  counts.counts.resize(2, 2);
  counts.counts << 30, 10, 5, 55;

  Rng rng(SeedStream::root(17).derive("counts"));
  double mean00 = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const ConfusionCounts draw = resample_confusion(counts, rng);
    REQUIRE(draw.total() == 100);
    REQUIRE(draw.counts.minCoeff() >= 0);
    mean00 += draw.counts(0, 0);
  }
  mean00 /= reps;
  CHECK(std::abs(mean00 - 30.0) < 1.5);  // three standard errors of the mean

  ConfusionCounts empty;
  empty.counts = Eigen::MatrixXi::Zero(2, 2);
  Rng rng2(SeedStream::root(1));
  CHECK_THROWS_AS(resample_confusion(empty, rng2), InsufficientDataError);
}

TEST_CASE("bootstrap runs are seed-reproducible and schedule-independent") {
  const Cohort cohort = small_cohort(600);
  const ConfusionCounts counts = k2_counts();
  AdjustOptions options;
  options.backend = NuisanceBackend::frequency;
  BootstrapPlan plan;
  plan.r_analysis = 30;
  plan.seed = 902;
  plan.keep_replicates = true;

  const BootstrapResult first = run_bootstrap(cohort, counts, plan, options);
  const BootstrapResult second = run_bootstrap(cohort, counts, plan, options);
  CHECK(first.risk_ratio.lower == second.risk_ratio.lower);
  CHECK(first.risk_ratio.upper == second.risk_ratio.upper);
  CHECK(first.odds_ratio.lower == second.odds_ratio.lower);
  REQUIRE(first.risk_ratio.replicate_values.size() ==
          second.risk_ratio.replicate_values.size());
  for (size_t i = 0; i < first.risk_ratio.replicate_values.size(); ++i) {
    CHECK(first.risk_ratio.replicate_values[i] ==
          second.risk_ratio.replicate_values[i]);
  }

  BootstrapPlan threaded = plan;
  threaded.threads = 3;
  const BootstrapResult third = run_bootstrap(cohort, counts, threaded, options);
  CHECK(first.risk_ratio.lower == third.risk_ratio.lower);
  CHECK(first.risk_ratio.upper == third.risk_ratio.upper);

  BootstrapPlan reseeded = plan;
  reseeded.seed = 903;
  const BootstrapResult fourth = run_bootstrap(cohort, counts, reseeded, options);
  CHECK(first.risk_ratio.lower != fourth.risk_ratio.lower);
}

TEST_CASE("analysis-mode intervals bracket the generating truth") {
  const Cohort cohort = small_cohort(2000);
  const ConfusionCounts counts = k2_counts();
  AdjustOptions options;
  options.backend = NuisanceBackend::frequency;
  BootstrapPlan plan;
  plan.seed = 11;
  plan.keep_replicates = true;

  const BootstrapResult result = run_bootstrap(cohort, counts, plan, options);
  CHECK(result.n_requested == 100);
  CHECK(result.n_survived + result.n_dropped == 100);
  CHECK(result.mode == BootstrapMode::analysis);
  CHECK(result.risk_ratio.point == result.point.risk_ratio);
  CHECK(result.risk_ratio.lower <= result.risk_ratio.upper);
  CHECK(result.risk_ratio.lower < kTruthK2.risk_ratio);
  CHECK(result.risk_ratio.upper > kTruthK2.risk_ratio);
  CHECK(result.odds_ratio.lower < kTruthK2.odds_ratio);
  CHECK(result.odds_ratio.upper > kTruthK2.odds_ratio);
  // kept replicates come back sorted and match the survivor count
  REQUIRE(static_cast<long>(result.risk_ratio.replicate_values.size()) ==
          result.n_survived);
  CHECK(std::is_sorted(result.risk_ratio.replicate_values.begin(),
                       result.risk_ratio.replicate_values.end()));

  BootstrapPlan quiet = plan;
  quiet.keep_replicates = false;
  const BootstrapResult without =
      run_bootstrap(cohort, counts, quiet, options);
  CHECK(without.risk_ratio.replicate_values.empty());
}

TEST_CASE("crossed mode multiplies the two replicate axes") {
  const Cohort cohort = small_cohort(500);
  const ConfusionCounts counts = k2_counts();
  AdjustOptions options;
  options.backend = NuisanceBackend::frequency;
  BootstrapPlan plan;
  plan.mode = BootstrapMode::both;
  plan.r_analysis = 6;
  plan.r_validation = 4;
  plan.seed = 77;

  const BootstrapResult result = run_bootstrap(cohort, counts, plan, options);
  CHECK(result.n_requested == 24);
  CHECK(result.n_survived + result.n_dropped == 24);
  CHECK(result.risk_ratio.n_replicates == result.n_survived);
  CHECK(result.mode == BootstrapMode::both);
}

TEST_CASE("a perfectly diagonal validation table collapses its interval") {
  const Cohort cohort = small_cohort(400);
  ConfusionCounts diagonal;
  diagonal.counts.resize(2, 2);
  diagonal.counts << 5, 0, 0, 7;

  AdjustOptions options;
  options.backend = NuisanceBackend::frequency;
  BootstrapPlan plan;
  plan.mode = BootstrapMode::validation;
  plan.r_validation = 40;
  plan.seed = 3;

  // every surviving resample of a diagonal table is again diagonal, so all
  // replicates reproduce the point estimate exactly
  const BootstrapResult result = run_bootstrap(cohort, diagonal, plan, options);
  CHECK(result.n_survived >= 1);
  CHECK(result.risk_ratio.lower == result.point.risk_ratio);
  CHECK(result.risk_ratio.upper == result.point.risk_ratio);
  CHECK(result.odds_ratio.lower == result.point.odds_ratio);
}

TEST_CASE("failed replicates are counted and an unusable majority throws") {
  const Cohort cohort = small_cohort(300);
  ConfusionCounts fragile;
  fragile.counts.resize(2, 2);
  fragile.counts << 1, 0, 0, 1;  // each resample loses a row with probability 1/2

  AdjustOptions options;
  options.backend = NuisanceBackend::frequency;
  BootstrapPlan plan;
  plan.mode = BootstrapMode::validation;
  plan.r_validation = 50;

  bool saw_failure = false;
  bool saw_success = false;
  for (std::uint64_t seed = 1; seed <= 20 && !(saw_failure && saw_success); ++seed) {
    plan.seed = seed;
    try {
      const BootstrapResult result = run_bootstrap(cohort, fragile, plan, options);
      saw_success = true;
      CHECK(result.n_dropped >= 1);
      CHECK(result.n_dropped * 2 <= result.n_requested);
      CHECK(result.n_survived + result.n_dropped == 50);
    } catch (const TooFewReplicatesError&) {
      saw_failure = true;
    }
  }
  CHECK(saw_success);
  CHECK(saw_failure);
}

TEST_CASE("errors on the original inputs propagate instead of being dropped") {
  const Cohort cohort = small_cohort(300);
  ConfusionCounts zero_row;
  zero_row.counts.resize(2, 2);
  zero_row.counts << 10, 5, 0, 0;
  BootstrapPlan plan;
  AdjustOptions options;
  options.backend = NuisanceBackend::frequency;
  CHECK_THROWS_AS(run_bootstrap(cohort, zero_row, plan, options), ZeroRowError);

  ConfusionCounts wrong_size;
  wrong_size.counts = Eigen::MatrixXi::Constant(3, 3, 5);
  CHECK_THROWS_AS(run_bootstrap(cohort, wrong_size, plan, options),
                  DimensionMismatchError);
}

TEST_CASE("the simex estimator runs under the bootstrap with derived seeds") {
  const Cohort cohort = small_cohort(400);
  const ConfusionCounts counts = k2_counts();
  AdjustOptions options;
  options.backend = NuisanceBackend::frequency;
  options.smoothing_alpha = 0.5;  // keep fractional powers of resampled tables safe
  SimexConfig simex;
  simex.b_per_lambda = 2;
  BootstrapPlan plan;
  plan.estimator = Method::mc_simex;
  plan.r_analysis = 5;
  plan.seed = 19;

  const BootstrapResult first = run_bootstrap(cohort, counts, plan, options, simex);
  CHECK(first.n_requested == 5);
  CHECK(first.n_survived >= 3);
  CHECK(first.point.method == Method::mc_simex);
  CHECK(std::isfinite(first.risk_ratio.lower));
  const BootstrapResult second = run_bootstrap(cohort, counts, plan, options, simex);
  CHECK(first.risk_ratio.lower == second.risk_ratio.lower);
  CHECK(first.risk_ratio.upper == second.risk_ratio.upper);
}
