#pragma once

#include "datamkt/game.hpp"

#include <optional>
#include <vector>

namespace datamkt {

// Utilitarian social surplus sum_i (1 - v_i) I_i(a); transfers cancel.
double social_surplus(const KnownValueInstance& instance, const ActionProfile& a);

struct FirstBestResult {
  ActionProfile profile;
  double surplus = 0.0;
  std::vector<ActionProfile> ties;  // surplus-tied profiles, lex sorted
  bool symmetric_mode = false;
};

// argmax of social surplus over {0,1}^n (full scan, n <= 20) or over
// per-block sharing counts. Lexicographic tie-breaking.
FirstBestResult first_best(const KnownValueInstance& instance, const SolveOptions& options = {});

struct FirstBestUserCondition {
  int user = -1;
  double value = 0.0;  // surplus change from switching the user's bit on
  bool consistent = false;
};

struct FirstBestConditionReport {
  bool consistent = false;
  std::vector<FirstBestUserCondition> users;
};

// Per-user optimality condition at a candidate profile. With B the profile
// with user i's bit forced off, the change in social surplus from switching
// i on is
//
//   T_i = sum_j (1 - v_j) Cov(X_i, X_j | S_B)^2 / (1 + variance(i) - I_i(B)),
//
// the Gaussian one-signal update applied to every user's posterior variance.
// Consistency: T_i >= -tol where a_i = 1 and T_i < tol where a_i = 0. At a
// surplus argmax the condition holds for every user by single-flip
// optimality. The denominator is at least 1 (I_i <= variance(i)); this is
// asserted.
FirstBestConditionReport verify_first_best_condition(const KnownValueInstance& instance,
                                                     const ActionProfile& a, double tol = 1e-9);

// Upper bound on equilibrium social surplus:
//   sum_{i: v_i < 1} (1 - v_i) I_i(everyone shares)
//   - sum_{i: v_i > 1} (v_i - 1) I_i(only the virtual-low set shares).
// `phi` supplies per-user virtual values; defaults to the values themselves
// (a known valuation carries no information rent).
double surplus_upper_bound(const KnownValueInstance& instance,
                           const std::optional<Eigen::VectorXd>& phi = std::nullopt);

enum class EfficiencyVerdict { Efficient, Inefficient, Indeterminate };

// Structural correlation patterns that determine whether the equilibrium can
// be efficient. Matching is diagnostic metadata; the verdict always comes
// from the direct surplus comparison.
enum class EfficiencyPattern {
  // Every high-value user uncorrelated with all other users, and the
  // low-value set coincides with the virtual-low set: efficient.
  IsolatedHighValue,
  // Some high-value user is correlated with a virtual-low user: inefficient
  // for high enough high-side valuations.
  HighTiedToBuyableLow,
  // High-value users are uncorrelated with the virtual-low set, but some
  // low-value user outside it is correlated with a high-value user:
  // inefficient for extreme valuations.
  HighTiedToUnbuyableLow,
  // High-value users are uncorrelated with all low-value users and at least
  // two high-value users are correlated: inefficient for high-side
  // valuations close enough to 1.
  CorrelatedHighGroup,
  None,
};

const char* to_string(EfficiencyVerdict verdict);
const char* to_string(EfficiencyPattern pattern);

struct EfficiencyReport {
  std::vector<int> low_value_users;   // v_i < 1 (strict; v_i = 1 belongs to neither side)
  std::vector<int> high_value_users;  // v_i > 1
  std::vector<int> virtual_low_users; // Phi_i(v_i) <= 1
  EfficiencyVerdict verdict = EfficiencyVerdict::Indeterminate;
  EfficiencyPattern matched_pattern = EfficiencyPattern::None;
  double surplus_at_equilibrium = 0.0;
  double first_best_surplus = 0.0;
  double surplus_bound = 0.0;
};

// Verdict: Efficient iff first-best surplus exceeds the equilibrium surplus
// by at most 1e-9. "Uncorrelated" means the covariance entry is exactly zero
// within 1e-12.
EfficiencyReport classify_efficiency(const KnownValueInstance& instance,
                                     const ActionProfile& equilibrium_profile,
                                     const std::optional<Eigen::VectorXd>& phi = std::nullopt,
                                     const SolveOptions& options = {});

}  // namespace datamkt
