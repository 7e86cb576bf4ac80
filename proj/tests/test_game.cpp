#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "datamkt/game.hpp"
#include "datamkt/rng.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace datamkt;
using datamkt::testing::random_market;

namespace {

KnownValueInstance example1_instance(double rho, double v = 1.0) {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, rho, rho, 1.0;
  return {GaussianMarket(sigma), Eigen::Vector2d(v, v)};
}

KnownValueInstance example2_instance() {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(3, 3, 0.3);
  sigma.diagonal().setOnes();
  return {GaussianMarket(sigma), Eigen::Vector3d(1.18, 1.18, 1.18)};
}

KnownValueInstance random_instance(SplitMix64& rng, int n, double v_lo = 0.0, double v_hi = 3.0) {
  GaussianMarket market = random_market(rng, n);
  Eigen::VectorXd values(n);
  for (int i = 0; i < n; ++i) values(i) = rng.uniform(v_lo, v_hi);
  return {std::move(market), std::move(values)};
}

bool contains(const std::vector<ActionProfile>& set, const ActionProfile& a) {
  return std::any_of(set.begin(), set.end(), [&](const ActionProfile& x) { return x == a; });
}

}  // namespace

TEST_CASE("instance and price validation") {
  CHECK_THROWS_AS(KnownValueInstance(GaussianMarket(Eigen::MatrixXd::Identity(2, 2)),
                                     Eigen::Vector2d(1.0, -0.1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(PriceVector(Eigen::Vector2d(0.5, -0.5)), std::invalid_argument);
}

TEST_CASE("user payoff") {
  // Nobody shares, nothing is paid: the normalization point.
  const KnownValueInstance quiet = example1_instance(0.7);
  CHECK(user_payoff(quiet, ActionProfile::all_zeros(2), PriceVector::zeros(2), 0) == 0.0);

  // Single user: 0.3 - 0.5 * 0.5 = 0.05.
  const KnownValueInstance single(GaussianMarket(Eigen::MatrixXd::Identity(1, 1)),
                                  Eigen::VectorXd::Constant(1, 0.5));
  CHECK(user_payoff(single, ActionProfile::all_ones(1),
                    PriceVector(Eigen::VectorXd::Constant(1, 0.3)), 0) ==
        doctest::Approx(0.05).epsilon(1e-12));

  // rho = 0.5, v = 1, both share at the optimal price: the sharer ends up
  // strictly worse off than autarky; the correlation externality bites.
  const KnownValueInstance ex1 = example1_instance(0.5);
  const PriceVector p = PriceVector::constant(2, 0.40833333333333333);
  CHECK(user_payoff(ex1, ActionProfile::all_ones(2), p, 0) ==
        doctest::Approx(-0.125).epsilon(1e-9));
}

TEST_CASE("best response") {
  const KnownValueInstance ex1 = example1_instance(0.5);

  // Unpaid sharing with a positive marginal is never a best response.
  CHECK_FALSE(best_response(ex1, ActionProfile::all_zeros(2), 0.0, 0));

  // A privacy-indifferent user shares at any price.
  const KnownValueInstance indifferent(example1_instance(0.5).market, Eigen::Vector2d(0.0, 1.0));
  CHECK(best_response(indifferent, ActionProfile::all_zeros(2), 0.0, 0));

  // Exactly at the threshold: ties break toward sharing.
  CHECK(best_response(ex1, ActionProfile::from_bits({0, 1}), 0.40833333333333333, 0));
  CHECK_FALSE(best_response(ex1, ActionProfile::from_bits({0, 1}), 0.40833333333333333 - 1e-12, 0));
}

TEST_CASE("lattice extremes by iterated best response") {
  const KnownValueInstance ex1 = example1_instance(0.5);

  // Zero prices, positive values and correlations: nobody shares.
  CHECK(least_user_equilibrium(ex1, PriceVector::zeros(2)) == ActionProfile::all_zeros(2));

  // Prices inside the multiplicity bracket [0.40833..., 0.5].
  const PriceVector bracket = PriceVector::constant(2, 0.45);
  CHECK(least_user_equilibrium(ex1, bracket) == ActionProfile::all_zeros(2));
  CHECK(greatest_user_equilibrium(ex1, bracket) == ActionProfile::all_ones(2));

  // Prices above every threshold make sharing dominant.
  const PriceVector high = PriceVector::constant(2, 10.0);
  CHECK(least_user_equilibrium(ex1, high) == ActionProfile::all_ones(2));
  CHECK(greatest_user_equilibrium(ex1, high) == ActionProfile::all_ones(2));
}

TEST_CASE("equilibrium enumeration") {
  const KnownValueInstance ex1 = example1_instance(0.5);

  // Inside the bracket exactly the two extremes are equilibria.
  const auto eqs = enumerate_user_equilibria(ex1, PriceVector::constant(2, 0.45));
  REQUIRE(eqs.size() == 2);
  CHECK(eqs[0] == ActionProfile::all_zeros(2));
  CHECK(eqs[1] == ActionProfile::all_ones(2));

  // Huge prices: sharing is dominant, all-ones is the only equilibrium.
  const auto dominant = enumerate_user_equilibria(ex1, PriceVector::constant(2, 10.0));
  REQUIRE(dominant.size() == 1);
  CHECK(dominant[0] == ActionProfile::all_ones(2));

  // At the three-user optimum's prices (0, p*, p*), the supported lattice
  // contains all-zeros besides the chosen two-sharer profile; worked out from
  // the thresholds: p* = 1.18 (2/3.91 - 0.045) = 0.55048056... while the
  // stand-alone threshold is 1.18 * 0.5 = 0.59.
  const KnownValueInstance ex2 = example2_instance();
  const StackelbergResult eq = stackelberg_equilibrium(ex2);
  const auto at_opt = enumerate_user_equilibria(ex2, eq.outcome.prices);
  REQUIRE(at_opt.size() == 2);
  CHECK(at_opt[0] == ActionProfile::all_zeros(3));
  CHECK(at_opt[1] == ActionProfile::from_bits({0, 1, 1}));
  CHECK(eq.coordination_risk);
}

TEST_CASE("lattice extremes agree with enumeration on random instances") {
  SplitMix64 rng(53);
  for (int t = 0; t < 25; ++t) {
    const int n = 2 + static_cast<int>(rng.next_below(5));
    const KnownValueInstance instance = random_instance(rng, n);
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) p(i) = rng.uniform(0.0, 1.5);
    const PriceVector prices(p);

    const auto eqs = enumerate_user_equilibria(instance, prices);
    REQUIRE_FALSE(eqs.empty());
    const ActionProfile least = least_user_equilibrium(instance, prices);
    const ActionProfile greatest = greatest_user_equilibrium(instance, prices);
    CHECK(contains(eqs, least));
    CHECK(contains(eqs, greatest));
    for (const ActionProfile& a : eqs) {
      CHECK(a.dominates(least));
      CHECK(greatest.dominates(a));
    }
  }
}

TEST_CASE("supporting prices") {
  const KnownValueInstance ex1 = example1_instance(0.5);
  const PriceVector p = supporting_prices(ex1, ActionProfile::all_ones(2));
  CHECK(p[0] == doctest::Approx(0.40833333333333333).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.40833333333333333).epsilon(1e-12));

  const PriceVector partial = supporting_prices(ex1, ActionProfile::from_bits({1, 0}));
  CHECK(partial[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(partial[1] == 0.0);
}

TEST_CASE("platform optimum: two-user closed form") {
  for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const KnownValueInstance instance = example1_instance(rho);
    const StackelbergResult eq = stackelberg_equilibrium(instance);
    const double p_star = (2.0 - rho * rho) * (2.0 - rho * rho) / (2.0 * (4.0 - rho * rho));
    CHECK(eq.outcome.profile == ActionProfile::all_ones(2));
    CHECK(eq.outcome.prices[0] == doctest::Approx(p_star).epsilon(1e-9));
    CHECK(eq.outcome.prices[1] == doctest::Approx(p_star).epsilon(1e-9));
    // Platform payoff simplifies to rho^2.
    CHECK(eq.outcome.platform_payoff == doctest::Approx(rho * rho).epsilon(1e-9));
    CHECK(eq.ties.size() == 1);
  }
}

TEST_CASE("platform optimum: three-way payoff tie") {
  const StackelbergResult eq = stackelberg_equilibrium(example2_instance());
  REQUIRE(eq.ties.size() == 3);
  for (const ActionProfile& tie : eq.ties) CHECK(tie.sharer_count() == 2);
  // Lexicographic tie order.
  CHECK(eq.outcome.profile == ActionProfile::from_bits({0, 1, 1}));
  // Frozen from the rational closed form: payoff = (4.306 - 2.36 * 1.82405) / 3.91.
  CHECK(eq.outcome.platform_payoff == doctest::Approx(0.00031764705882353).epsilon(1e-9));
}

TEST_CASE("platform optimum: independent users decouple") {
  Eigen::VectorXd vars(3);
  vars << 1.0, 2.0, 0.5;
  const GaussianMarket market(vars.asDiagonal());
  Eigen::VectorXd values(3);
  values << 0.2, 0.9, 0.5;
  const KnownValueInstance instance(market, values);
  const StackelbergResult eq = stackelberg_equilibrium(instance);
  CHECK(eq.outcome.profile == ActionProfile::all_ones(3));
  for (int i = 0; i < 3; ++i) {
    const double s2 = vars(i);
    CHECK(eq.outcome.prices[i] == doctest::Approx(values(i) * s2 * s2 / (1.0 + s2)).epsilon(1e-12));
  }
  CHECK_FALSE(eq.coordination_risk);
}

TEST_CASE("platform optimum beats every sampled price vector") {
  SplitMix64 rng(59);
  for (int t = 0; t < 8; ++t) {
    const int n = 2 + static_cast<int>(rng.next_below(3));
    const KnownValueInstance instance = random_instance(rng, n);
    const StackelbergResult eq = stackelberg_equilibrium(instance);
    for (int s = 0; s < 30; ++s) {
      Eigen::VectorXd p(n);
      for (int i = 0; i < n; ++i) p(i) = rng.uniform(0.0, 2.0);
      const PriceVector prices(p);
      for (const ActionProfile& a : enumerate_user_equilibria(instance, prices)) {
        CHECK(make_outcome(instance, a, prices).platform_payoff <=
              eq.outcome.platform_payoff + 1e-9);
      }
    }
  }
}

TEST_CASE("outcome identities") {
  SplitMix64 rng(61);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(rng.next_below(4));
    const KnownValueInstance instance = random_instance(rng, n);
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) p(i) = rng.uniform(0.0, 1.0);
    const ActionProfile a(rng.next() & ((1ULL << n) - 1), n);
    const MarketOutcome outcome = make_outcome(instance, a, PriceVector(p));

    const Eigen::VectorXd leak = breached_information_all(instance.market, a);
    double platform = leak.sum();
    for (int i = 0; i < n; ++i) {
      if (a.shares(i)) platform -= p(i);
      CHECK(outcome.user_payoffs(i) ==
            doctest::Approx(user_payoff(instance, a, outcome.prices, i)).epsilon(1e-12));
    }
    CHECK(outcome.platform_payoff == doctest::Approx(platform).epsilon(1e-10));
    CHECK(outcome.social_surplus ==
          doctest::Approx(outcome.platform_payoff + outcome.user_payoffs.sum()).epsilon(1e-10));
  }
}

TEST_CASE("symmetric reduction agrees with the full scan") {
  SplitMix64 rng(67);
  for (int t = 0; t < 6; ++t) {
    // Random two-block market, block sizes 2..4, built from correlations that
    // keep the matrix comfortably PSD.
    const int s1 = 2 + static_cast<int>(rng.next_below(3));
    const int s2 = 2 + static_cast<int>(rng.next_below(3));
    const int n = s1 + s2;
    const double w1 = rng.uniform(0.0, 0.3);
    const double w2 = rng.uniform(0.0, 0.3);
    const double cross = rng.uniform(0.0, 0.15);
    Eigen::MatrixXd sigma(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const bool bi = i < s1;
        const bool bj = j < s1;
        if (i == j) {
          sigma(i, j) = 1.0;
        } else if (bi == bj) {
          sigma(i, j) = bi ? w1 : w2;
        } else {
          sigma(i, j) = cross;
        }
      }
    }
    Eigen::VectorXd values(n);
    const double v1 = rng.uniform(0.2, 2.0);
    const double v2 = rng.uniform(0.2, 2.0);
    for (int i = 0; i < n; ++i) values(i) = i < s1 ? v1 : v2;
    const KnownValueInstance instance(GaussianMarket(sigma), values);

    const StackelbergResult full = stackelberg_equilibrium(instance, {SymmetryMode::Off, 1e-9});
    const StackelbergResult sym = stackelberg_equilibrium(instance, {SymmetryMode::On, 1e-9});
    CHECK(sym.symmetric_mode);
    CHECK_FALSE(full.symmetric_mode);
    CHECK(full.outcome.platform_payoff ==
          doctest::Approx(sym.outcome.platform_payoff).epsilon(1e-10));
    CHECK(full.outcome.profile == sym.outcome.profile);
  }
}

TEST_CASE("size caps") {
  SplitMix64 rng(71);
  const KnownValueInstance big(random_market(rng, 21), Eigen::VectorXd::Ones(21));
  CHECK_THROWS_AS(enumerate_user_equilibria(big, PriceVector::zeros(21)), std::invalid_argument);
  CHECK_THROWS_AS(stackelberg_equilibrium(big, {SymmetryMode::Off, 1e-9}), std::invalid_argument);
}
