#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace proxest {

inline constexpr int kMissingLabel = -1;

// One analysis cohort. Parallel columns over n units:
//   y       binary outcome
//   x       binary treatment
//   c       n x p covariates
//   u_star  proxy category in [0, K) or kMissingLabel
//   u_true  latent category; empty vector when unavailable
// Treated as immutable after construction.
struct Cohort {
  Eigen::VectorXi y;
  Eigen::VectorXi x;
  Eigen::MatrixXd c;
  Eigen::VectorXi u_star;
  Eigen::VectorXi u_true;  // size 0 when truth is not recorded
  int k = 0;
  std::vector<std::string> category_names;

  long n() const { return y.size(); }
  int p() const { return static_cast<int>(c.cols()); }
  bool has_truth() const { return u_true.size() == n() && n() > 0; }

  // Throws DataError on any violated invariant.
  void validate() const;

  long missing_proxy_count() const;

  std::vector<long> rows_with_proxy() const;

  Cohort subset(const std::vector<long>& rows) const;

  // Returns a copy with every missing proxy relabeled to `category`.
  Cohort with_missing_relabeled(int category) const;

  // Default names "0", "1", ... when none are configured.
  std::string category_name(int u) const;
};

enum class MissingPolicy { drop, remap };

struct MissingLabelPolicy {
  MissingPolicy policy = MissingPolicy::drop;
  int remap_to = 0;
};

// Applies the policy; reports how many rows were dropped (0 under remap).
Cohort apply_missing_policy(const Cohort& cohort, const MissingLabelPolicy& policy,
                            long* dropped_rows);

}  // namespace proxest
