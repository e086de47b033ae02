#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crmpc/condense.hpp"
#include "crmpc/lp.hpp"

namespace crmpc {

struct RedundancyReport {
  std::vector<int> removed_rows;
  /// Rows whose test LP failed numerically and were kept.
  std::vector<int> warnings;
  int rows_before = 0;
  int rows_after = 0;
};

struct RedundancyResult {
  CondensedQp qp;
  RedundancyReport report;
};

/// Sequential elimination in ascending row order: row i is dropped when
/// max over {(x, U) : kept rows other than i, x in x_domain} of
/// G^i U - E^i x stays within w^i + tol. Without x_domain the state is free.
inline RedundancyResult remove_redundant(const CondensedQp& qp,
                                         const std::optional<HalfspaceSet>& x_domain = std::nullopt,
                                         double tol = 1e-9) {
  const int n = qp.n();
  const int nu = qp.vars();
  const int q = qp.rows();
  const int dom_rows = x_domain ? x_domain->rows() : 0;
  if (x_domain) detail::require_dims(x_domain->dim() == n, "remove_redundant: x_domain dimension");

  // Joint rows over z = (x, U): [-E  G] z <= w.
  Eigen::MatrixXd joint(q, n + nu);
  joint << -qp.e_mat, qp.g_mat;

  std::vector<char> kept(static_cast<std::size_t>(q), 1);
  RedundancyResult out;
  out.report.rows_before = q;
  LpInstance lp;
  lp.maximize = true;
  for (int i = 0; i < q; ++i) {
    const int others = q - 1 - static_cast<int>(out.report.removed_rows.size()) + dom_rows;
    lp.a.resize(others, n + nu);
    lp.b.resize(others);
    int r = 0;
    for (int j = 0; j < q; ++j) {
      if (j == i || !kept[static_cast<std::size_t>(j)]) continue;
      lp.a.row(r) = joint.row(j);
      lp.b(r) = qp.w_vec(j);
      ++r;
    }
    if (x_domain) {
      lp.a.block(r, 0, dom_rows, n) = x_domain->c;
      lp.a.block(r, n, dom_rows, nu).setZero();
      lp.b.segment(r, dom_rows) = x_domain->d;
    }
    lp.objective = joint.row(i).transpose();
    const LpResult res = lp_solve(lp);
    if (res.status == LpStatus::kOptimal && res.value <= qp.w_vec(i) + tol) {
      kept[static_cast<std::size_t>(i)] = 0;
      out.report.removed_rows.push_back(i);
    } else if (res.status == LpStatus::kNumericalFailure) {
      out.report.warnings.push_back(i);
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < q; ++i)
    if (kept[static_cast<std::size_t>(i)]) keep.push_back(i);
  out.qp = qp.select_rows(keep);
  out.report.rows_after = static_cast<int>(keep.size());
  return out;
}

/// One line per removed row: index, time step, kind.
inline void write_report(std::ostream& os, const CondensedQp& original, const RedundancyReport& rep) {
  os << "rows " << rep.rows_before << " -> " << rep.rows_after << "\n";
  for (int i : rep.removed_rows) {
    const RowTag& t = original.row_tags[static_cast<std::size_t>(i)];
    os << i << " step=" << t.step << " kind=" << to_string(t.kind) << " set_row=" << t.set_row << "\n";
  }
  for (int i : rep.warnings) os << "warning: LP failed for row " << i << ", kept\n";
}

/// Builds the condensed QP of an example, with offline reduction when the
/// spec requests it.
inline CondensedQp condense_with_reduction(const MpcSpec& spec) {
  CondensedQp qp = condense(spec);
  if (spec.remove_redundant_rows) qp = remove_redundant(qp).qp;
  return qp;
}

}  // namespace crmpc
