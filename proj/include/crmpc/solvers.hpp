#pragma once

#include "crmpc/active_set.hpp"
#include "crmpc/ipm.hpp"
#include "crmpc/qp.hpp"

namespace crmpc {

inline QpResult solve_qp(const QpInstance& inst, SolverKind kind) {
  return kind == SolverKind::kIpm ? solve_ipm(inst) : solve_active_set(inst);
}

}  // namespace crmpc
