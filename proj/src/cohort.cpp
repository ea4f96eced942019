#include "proxest/cohort.hpp"

#include <string>

#include "proxest/errors.hpp"

namespace proxest {

void Cohort::validate() const {
  const long size = n();
  if (size < 1) throw DataError("cohort must contain at least one unit");
  if (k < 1) throw DataError("cohort category count must be >= 1");
  if (x.size() != size || u_star.size() != size || c.rows() != size)
    throw DimensionMismatchError("cohort columns disagree on unit count");
  if (u_true.size() != 0 && u_true.size() != size)
    throw DimensionMismatchError("u_true length does not match cohort size");
  for (long i = 0; i < size; ++i) {
    if (y[i] != 0 && y[i] != 1) throw DataError("outcome must be 0/1");
    if (x[i] != 0 && x[i] != 1) throw DataError("treatment must be 0/1");
    if (u_star[i] != kMissingLabel && (u_star[i] < 0 || u_star[i] >= k))
      throw DataError("proxy label out of range at row " + std::to_string(i));
    if (u_true.size() != 0 && (u_true[i] < 0 || u_true[i] >= k))
      throw DataError("true label out of range at row " + std::to_string(i));
  }
  if (!category_names.empty() &&
      category_names.size() != static_cast<std::size_t>(k))
    throw DataError("category_names length does not match K");
}

long Cohort::missing_proxy_count() const {
  long count = 0;
  for (long i = 0; i < n(); ++i)
    if (u_star[i] == kMissingLabel) ++count;
  return count;
}

std::vector<long> Cohort::rows_with_proxy() const {
  std::vector<long> rows;
  rows.reserve(static_cast<std::size_t>(n()));
  for (long i = 0; i < n(); ++i)
    if (u_star[i] != kMissingLabel) rows.push_back(i);
  return rows;
}

Cohort Cohort::subset(const std::vector<long>& rows) const {
  Cohort out;
  const long m = static_cast<long>(rows.size());
  out.y.resize(m);
  out.x.resize(m);
  out.c.resize(m, c.cols());
  out.u_star.resize(m);
  if (u_true.size() != 0) out.u_true.resize(m);
  for (long j = 0; j < m; ++j) {
    const long i = rows[static_cast<std::size_t>(j)];
    out.y[j] = y[i];
    out.x[j] = x[i];
    out.c.row(j) = c.row(i);
    out.u_star[j] = u_star[i];
    if (u_true.size() != 0) out.u_true[j] = u_true[i];
  }
  out.k = k;
  out.category_names = category_names;
  return out;
}

Cohort Cohort::with_missing_relabeled(int category) const {
  if (category < 0 || category >= k)
    throw DataError("remap category out of range");
  Cohort out = *this;
  for (long i = 0; i < out.n(); ++i)
    if (out.u_star[i] == kMissingLabel) out.u_star[i] = category;
  return out;
}

std::string Cohort::category_name(int u) const {
  if (!category_names.empty() && u >= 0 &&
      static_cast<std::size_t>(u) < category_names.size())
    return category_names[static_cast<std::size_t>(u)];
  return std::to_string(u);
}

Cohort apply_missing_policy(const Cohort& cohort, const MissingLabelPolicy& policy,
                            long* dropped_rows) {
  if (policy.policy == MissingPolicy::remap) {
    if (dropped_rows) *dropped_rows = 0;
    return cohort.with_missing_relabeled(policy.remap_to);
  }
  const std::vector<long> rows = cohort.rows_with_proxy();
  if (dropped_rows)
    *dropped_rows = cohort.n() - static_cast<long>(rows.size());
  if (static_cast<long>(rows.size()) == cohort.n()) return cohort;
  if (rows.empty()) throw InsufficientDataError("every proxy label is missing");
  return cohort.subset(rows);
}

}  // namespace proxest
