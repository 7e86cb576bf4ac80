#pragma once

#include "datamkt/gaussian.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace datamkt {

// Known privacy valuations v_i >= 0, one per user.
struct KnownValueInstance {
  KnownValueInstance(GaussianMarket market_in, Eigen::VectorXd values_in);

  GaussianMarket market;
  Eigen::VectorXd values;

  int size() const { return market.size(); }
};

// Non-negative payments from the platform to users. A user can always
// decline, so negative offers never arise.
class PriceVector {
 public:
  explicit PriceVector(Eigen::VectorXd p);
  static PriceVector zeros(int n) { return PriceVector(Eigen::VectorXd::Zero(n)); }
  static PriceVector constant(int n, double p) {
    return PriceVector(Eigen::VectorXd::Constant(n, p));
  }

  int size() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_(i); }
  const Eigen::VectorXd& vec() const { return p_; }

 private:
  Eigen::VectorXd p_;
};

// (a, p) together with the payoffs they induce. Prices are paid to sharers
// only; the platform payoff is sum_i I_i(a) - sum_{i: a_i=1} p_i and the
// social surplus is the sum of all payoffs (transfers cancel).
struct MarketOutcome {
  ActionProfile profile;
  PriceVector prices;
  Eigen::VectorXd user_payoffs;
  double platform_payoff = 0.0;
  double social_surplus = 0.0;
};

MarketOutcome make_outcome(const KnownValueInstance& instance, const ActionProfile& a,
                           const PriceVector& p);

// u_i = p_i - v_i I_i(a) when a_i = 1, and -v_i I_i(a) when a_i = 0.
double user_payoff(const KnownValueInstance& instance, const ActionProfile& a,
                   const PriceVector& p, int i);

// Shares iff p_i >= v_i * marginal_leakage(market, a_minus_i, i).
// An indifferent user shares: the platform's optimal offer sits exactly at
// the indifference threshold, so the supported profile exists only under
// this convention.
bool best_response(const KnownValueInstance& instance, const ActionProfile& a_minus_i, double p_i,
                   int i);

// Iterated simultaneous best response from all-zeros (all-ones). Sharing
// incentives increase in others' sharing, so the iteration is monotone and
// reaches the least (greatest) user equilibrium in at most n rounds; a cap of
// n+1 rounds plus a fixed-point assertion guard against bugs.
ActionProfile least_user_equilibrium(const KnownValueInstance& instance, const PriceVector& p);
ActionProfile greatest_user_equilibrium(const KnownValueInstance& instance, const PriceVector& p);

// All profiles where every user's bit is a best response, sorted
// lexicographically. Exhaustive; n <= 20.
std::vector<ActionProfile> enumerate_user_equilibria(const KnownValueInstance& instance,
                                                     const PriceVector& p);

// Cheapest prices supporting a as a user equilibrium: sharers are paid their
// indifference threshold v_i * marginal leakage, non-sharers are paid 0.
PriceVector supporting_prices(const KnownValueInstance& instance, const ActionProfile& a);

enum class SymmetryMode {
  Auto,  // symmetric reduction when blocks exist and n > 12, full scan otherwise
  On,    // require a valid block structure
  Off,   // full profile scan (n <= 20)
};

struct SolveOptions {
  SymmetryMode symmetry = SymmetryMode::Auto;
  double tie_tolerance = 1e-9;
};

struct StackelbergResult {
  MarketOutcome outcome;
  // Profiles whose platform payoff ties the optimum within tie_tolerance,
  // sorted lexicographically. In symmetric mode these are one representative
  // per tied sharing-count class.
  std::vector<ActionProfile> ties;
  bool symmetric_mode = false;
  // The price vector supports a lattice of user equilibria; the platform is
  // credited with its preferred one. When the least equilibrium at the chosen
  // prices yields strictly less platform payoff, callers should audit the
  // coordination assumption.
  bool coordination_risk = false;
  ActionProfile least_equilibrium;
  double least_equilibrium_payoff = 0.0;
};

// Platform-optimal prices and supported profile: scans candidate profiles,
// prices each at the cheapest supporting level, and keeps the payoff
// maximizer. Ties are resolved lexicographically, preferring candidates that
// are exact user equilibria under the tie-toward-sharing convention.
StackelbergResult stackelberg_equilibrium(const KnownValueInstance& instance,
                                          const SolveOptions& options = {});

// Shared plan for profile scans: either a full 2^n enumeration or the
// per-block sharing-count reduction.
struct EnumerationPlan {
  bool symmetric = false;
  std::optional<BlockStructure> blocks;
};

EnumerationPlan plan_enumeration(const GaussianMarket& market, const std::vector<double>& user_key,
                                 SymmetryMode mode);

inline constexpr int kFullScanMaxUsers = 20;

}  // namespace datamkt
