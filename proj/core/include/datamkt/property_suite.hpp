#pragma once

#include "datamkt/mechanism.hpp"
#include "datamkt/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace datamkt {

enum class SuiteKind { Structure, Equilibrium, Mechanism };

SuiteKind suite_kind_from_string(const std::string& name);

struct SuiteReport {
  bool passed = true;
  std::vector<std::string> lines;          // one per check
  std::optional<std::string> first_failure;
};

struct SuiteOptions {
  // Payment rule for the mechanism suite; DropBoundaryTerm is the negative
  // control and must make the suite fail.
  PaymentRule payment_rule = PaymentRule::Standard;
  int ic_grid_points = 101;
  double ic_tolerance = 1e-7;
};

// Structure: monotonicity, submodularity, leakage bounds, the posterior
// variance identity. Equilibrium: lattice order, fixed points, enumeration
// extremes, platform optimality against sampled price vectors. Mechanism:
// non-negative payments and truthful-reporting grids.
SuiteReport run_property_suite(const Scenario& scenario, SuiteKind kind,
                               const SuiteOptions& options = {});

}  // namespace datamkt
