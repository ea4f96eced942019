#pragma once

#include <Eigen/Dense>

#include "proxest/cohort.hpp"

namespace proxest {

// Column layout of a model design matrix, fixed as
//   [ intercept | treatment | K-1 proxy dummies | covariates ]
// with each block optional. The reference proxy category carries no dummy.
struct DesignSpec {
  bool include_intercept = true;
  bool include_treatment = false;
  bool include_proxy_dummies = false;
  int k = 0;                    // category count when dummies are included
  int reference_category = 0;   // category without a dummy column
  int covariate_count = 0;

  int width() const {
    return (include_intercept ? 1 : 0) + (include_treatment ? 1 : 0) +
           (include_proxy_dummies ? k - 1 : 0) + covariate_count;
  }
  int intercept_column() const { return include_intercept ? 0 : -1; }
};

// resolves -1 to the default reference (last category)
int resolve_reference(int reference, int k);

DesignSpec outcome_design_spec(int k, int p, int reference = -1);
DesignSpec proxy_design_spec(int p);
DesignSpec propensity_design_spec(int p);

// Writable row reference that also binds to rows of column-major matrices.
using DesignRowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

// Fills one design row for covariates `c`, forced treatment `x`, and forced
// proxy category `u`. Unused arguments are ignored by specs without the
// corresponding block.
void fill_design_row(const DesignSpec& spec, DesignRowRef row,
                     const Eigen::Ref<const Eigen::RowVectorXd>& c, int x, int u);

// Design matrix over all cohort rows, taking x and u* from the cohort.
Eigen::MatrixXd build_design(const DesignSpec& spec, const Cohort& cohort);

}  // namespace proxest
