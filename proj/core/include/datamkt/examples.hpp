#pragma once

#include "datamkt/game.hpp"

#include <string>
#include <vector>

namespace datamkt {

// Canned desk-scale studies: a two-user market with multiple supported
// equilibria and a closed-form optimal price, a three-user market with a
// payoff-tied optimum, and a twenty-user two-community market swept over the
// cross-community correlation and the high-side privacy value.

// Two users, unit variances, correlation rho, common privacy value v.
// The platform-optimal prices are p_i = v (2 - rho^2)^2 / (2 (4 - rho^2)),
// supporting joint sharing; any common price strictly between that level and
// v/2 supports both all-zeros and all-ones as user equilibria.
struct Example1Row {
  double rho = 0.0;
  double price_low = 0.0;   // closed-form optimal price (interval lower end)
  double price_high = 0.0;  // v/2 (interval upper end)
  ActionProfile profile;
  double p0 = 0.0;
  double p1 = 0.0;
  double platform_payoff = 0.0;
  std::vector<ActionProfile> equilibria_at_mid;  // user equilibria at the interval midpoint
  bool matches_closed_form = false;
};

std::vector<double> example1_default_rho_grid();
std::vector<Example1Row> run_example1(const std::vector<double>& rho_grid, double v = 1.0);
std::string example1_csv(const std::vector<Example1Row>& rows);

// Three users, unit variances, all correlations 0.3, v_i = 1.18: the optimum
// is any profile with exactly two sharers and all three tie in platform
// payoff.
struct Example2Result {
  StackelbergResult solution;
  std::vector<double> tie_payoffs;  // payoff of each tied profile, recomputed
  double payoff_spread = 0.0;
};

Example2Result run_example2();
std::string example2_csv(const Example2Result& result);

// Two communities of ten users each, unit variances, within-community
// correlation 0.05, low community value 0.9, high community value v_h,
// cross-community correlation rho. Grid points whose covariance is not
// positive semidefinite are reported as infeasible rather than solved.
struct Example3Row {
  double v_high = 0.0;
  double rho = 0.0;
  bool feasible = false;
  double min_eigenvalue = 0.0;
  int low_sharers = 0;
  int high_sharers = 0;
  std::string profile;
  double platform_payoff = 0.0;
  double social_surplus = 0.0;
};

std::vector<double> example3_default_rho_grid();
std::vector<double> example3_default_vh_grid();
std::vector<Example3Row> run_example3(const std::vector<double>& vh_grid,
                                      const std::vector<double>& rho_grid);
std::string example3_csv(const std::vector<Example3Row>& rows);

inline constexpr double kExample3LowValue = 0.9;
inline constexpr double kExample3WithinCorrelation = 0.05;
inline constexpr int kExample3CommunitySize = 10;

}  // namespace datamkt
