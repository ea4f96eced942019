#include "proxest/design.hpp"

#include "proxest/errors.hpp"

namespace proxest {

int resolve_reference(int reference, int k) {
  if (reference == -1) return k - 1;
  if (reference < 0 || reference >= k) {
    throw InvalidConfigError("reference category out of range");
  }
  return reference;
}

DesignSpec outcome_design_spec(int k, int p, int reference) {
  DesignSpec spec;
  spec.include_treatment = true;
  spec.include_proxy_dummies = k > 1;
  spec.k = k;
  spec.reference_category = resolve_reference(reference, k);
  spec.covariate_count = p;
  return spec;
}

DesignSpec proxy_design_spec(int p) {
  DesignSpec spec;
  spec.include_treatment = true;
  spec.covariate_count = p;
  return spec;
}

DesignSpec propensity_design_spec(int p) {
  DesignSpec spec;
  spec.covariate_count = p;
  return spec;
}

void fill_design_row(const DesignSpec& spec, DesignRowRef row,
                     const Eigen::Ref<const Eigen::RowVectorXd>& c, int x, int u) {
  if (row.size() != spec.width()) {
    throw DimensionMismatchError("design row has wrong width");
  }
  if (c.size() != spec.covariate_count) {
    throw DimensionMismatchError("covariate row has wrong width");
  }
  int col = 0;
  if (spec.include_intercept) row(col++) = 1.0;
  if (spec.include_treatment) row(col++) = static_cast<double>(x);
  if (spec.include_proxy_dummies) {
    for (int j = 0; j < spec.k; ++j) {
      if (j == spec.reference_category) continue;
      row(col++) = (u == j) ? 1.0 : 0.0;
    }
  }
  row.segment(col, spec.covariate_count) = c;
}

Eigen::MatrixXd build_design(const DesignSpec& spec, const Cohort& cohort) {
  if (cohort.p() != spec.covariate_count) {
    throw DimensionMismatchError("cohort covariate count does not match design");
  }
  const long n = cohort.n();
  Eigen::MatrixXd design(n, spec.width());
  for (long i = 0; i < n; ++i) {
    fill_design_row(spec, design.row(i), cohort.c.row(i), cohort.x(i),
                    cohort.u_star(i));
  }
  return design;
}

}  // namespace proxest
