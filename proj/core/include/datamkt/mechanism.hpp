#pragma once

#include "datamkt/distribution.hpp"
#include "datamkt/game.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace datamkt {

// Market plus per-user valuation distributions; the platform knows the
// distributions but not the realized values.
struct BayesianInstance {
  BayesianInstance(GaussianMarket market_in, std::vector<ValueDistribution> distributions_in);

  GaussianMarket market;
  std::vector<ValueDistribution> distributions;

  int size() const { return market.size(); }
};

Eigen::VectorXd virtual_values(const BayesianInstance& instance, const Eigen::VectorXd& reports);

// Truth-eliciting prices for reported values v. The allocation maximizes
// sum_i (1 - v_i) I_i(a); the transfer to user i is
//
//   p_i = h_i(a(v)) - min_a h_i(a),   h_i(a) = I_i(a) + sum_{j!=i} (1 - v_j) I_j(a),
//
// non-negative by construction of the min. The transfer is owed to every
// user, sharer or not: u_i = p_i - v_i I_i(a(v)) then equals the welfare
// h-objective up to a constant in i's own report, which makes truthful
// reporting a dominant strategy. Withholding the transfer from non-sharers
// breaks that argument (and measurably breaks truthfulness).
struct VcgResult {
  ActionProfile allocation;
  PriceVector prices;
};

VcgResult vcg_prices(const GaussianMarket& market, const Eigen::VectorXd& reports);

// argmax_a sum_i (1 - Phi_i(v_i)) I_i(a) + Phi_i(v_i) I_i(a_{-i}, a_i = 0),
// i.e. the platform keeps every unit of leakage but pays virtual-value rent
// on each sharer's own marginal. Lexicographic tie-breaking; full scan for
// n <= 20 or per-block reduction when users are interchangeable.
ActionProfile bayesian_allocation(const BayesianInstance& instance, const Eigen::VectorXd& reports,
                                  const SolveOptions& options = {});

enum class PaymentRule {
  Standard,
  // Negative control for the incentive-compatibility test: drops the
  // v_i * g(v_i) boundary term from the payment.
  DropBoundaryTerm,
};

// Payment to user i at the reported vector:
//
//   p_i = integral_{v_i}^{v_max} g(x) dx + v_i g(v_i),
//   g(x) = I_i(a^E(x, v_{-i})) - I_i(a^E_{-i}(x, v_{-i}), a_i = 0),
//
// where g is the sharer's own-signal marginal at the allocation induced by
// report x (zero where the bit is off). g is piecewise constant: the
// allocation changes at finitely many thresholds, located by scanning 256
// segments and bisecting sign changes to 1e-10, then summing length x value.
double bayesian_payment(const BayesianInstance& instance, const Eigen::VectorXd& reports, int i,
                        PaymentRule rule = PaymentRule::Standard);

struct MechanismOutcome {
  Eigen::VectorXd reports;
  ActionProfile allocation;
  PriceVector payments;
  // sum_i I_i(a) minus payments to sharers.
  double platform_payoff = 0.0;
  Eigen::VectorXd virtual_values;
};

MechanismOutcome bayesian_outcome(const BayesianInstance& instance, const Eigen::VectorXd& reports,
                                  const SolveOptions& options = {});
MechanismOutcome vcg_outcome(const GaussianMarket& market, const Eigen::VectorXd& reports);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

// Monte Carlo estimate of E_v[max_a sum_i (1-Phi_i)I_i(a) + Phi_i I_i(a_{-i},0)]
// by inverse-cdf sampling. Every sample draws from its own counter-derived
// substream, so the estimate depends only on (seed, sample_count), not on
// how the loop is scheduled.
McEstimate expected_platform_payoff(const BayesianInstance& instance, std::int64_t sample_count,
                                    std::uint64_t seed);

// Tensor-grid quadrature over the supports (midpoint rule, points_per_axis
// per user). n <= 3; rejects distributions with atoms.
double expected_platform_payoff_quadrature(const BayesianInstance& instance,
                                           int points_per_axis = 200);

enum class MechanismKind { VcgKnownValues, BayesianOptimal };

struct IcViolation {
  int user = -1;
  double true_value = 0.0;
  double misreport = 0.0;
  double gain = 0.0;  // payoff(misreport) - payoff(truth)
};

struct IcReport {
  double max_gain = 0.0;
  std::optional<IcViolation> worst;
  std::int64_t comparisons = 0;

  bool ok(double tol) const { return max_gain <= tol; }
};

// Grid search for profitable misreports. For each user, each hypothetical
// true value on the grid and each misreport on the grid, the deviation payoff
// is evaluated at the reported-vector allocation and payment against the true
// value, with the other users' reports fixed at `true_values`:
//
//   u = p_i(report, v_{-i}) - v_true * I_i(a(report, v_{-i})).
//
// Grids span each user's distribution support with `grid_points` points.
// n <= 4.
IcReport incentive_compatibility_test(const BayesianInstance& instance,
                                      const Eigen::VectorXd& true_values, MechanismKind kind,
                                      int grid_points = 101,
                                      PaymentRule rule = PaymentRule::Standard);

}  // namespace datamkt
