#pragma once

#include "crmpc/active_set.hpp"
#include "crmpc/bench.hpp"
#include "crmpc/condense.hpp"
#include "crmpc/crem.hpp"
#include "crmpc/errors.hpp"
#include "crmpc/examples.hpp"
#include "crmpc/ipm.hpp"
#include "crmpc/lp.hpp"
#include "crmpc/model.hpp"
#include "crmpc/qp.hpp"
#include "crmpc/redundancy.hpp"
#include "crmpc/serialize.hpp"
#include "crmpc/sim.hpp"
#include "crmpc/solvers.hpp"
