#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "datamkt/rng.hpp"
#include "datamkt/welfare.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace datamkt;
using datamkt::testing::random_market;

namespace {

KnownValueInstance example1_instance(double rho, double v1, double v2) {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, rho, rho, 1.0;
  return {GaussianMarket(sigma), Eigen::Vector2d(v1, v2)};
}

KnownValueInstance random_instance(SplitMix64& rng, int n, double v_hi = 3.0) {
  GaussianMarket market = random_market(rng, n);
  Eigen::VectorXd values(n);
  for (int i = 0; i < n; ++i) values(i) = rng.uniform(0.0, v_hi);
  return {std::move(market), std::move(values)};
}

}  // namespace

TEST_CASE("social surplus") {
  const KnownValueInstance ex1 = example1_instance(0.5, 1.0, 1.0);
  CHECK(social_surplus(ex1, ActionProfile::all_zeros(2)) == 0.0);
  // Unit weights cancel exactly when v_i = 1.
  CHECK(social_surplus(ex1, ActionProfile::all_ones(2)) == doctest::Approx(0.0).epsilon(1e-12));

  const KnownValueInstance single(GaussianMarket(Eigen::MatrixXd::Identity(1, 1)),
                                  Eigen::VectorXd::Constant(1, 0.5));
  CHECK(social_surplus(single, ActionProfile::all_ones(1)) ==
        doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("first best") {
  SUBCASE("diagonal markets split on the unit value") {
    Eigen::VectorXd vars(4);
    vars << 1.0, 2.0, 0.5, 1.5;
    Eigen::VectorXd values(4);
    values << 0.3, 1.4, 0.99, 1.01;
    const KnownValueInstance instance(GaussianMarket(vars.asDiagonal()), values);
    const FirstBestResult fb = first_best(instance);
    CHECK(fb.profile == ActionProfile::from_bits({1, 0, 1, 0}));
  }
  SUBCASE("strong externality on a high-value user shuts the market") {
    const KnownValueInstance instance = example1_instance(0.9, 0.5, 5.0);
    const FirstBestResult fb = first_best(instance);
    CHECK(fb.profile == ActionProfile::all_zeros(2));
    CHECK(fb.surplus == 0.0);
  }
  SUBCASE("zero values make sharing free surplus") {
    SplitMix64 rng(73);
    const KnownValueInstance instance(random_market(rng, 4), Eigen::VectorXd::Zero(4));
    CHECK(first_best(instance).profile == ActionProfile::all_ones(4));
  }
  SUBCASE("v = 1 exactly is surplus-neutral: both bits tie") {
    const KnownValueInstance instance(GaussianMarket(Eigen::MatrixXd::Identity(1, 1)),
                                      Eigen::VectorXd::Ones(1));
    const FirstBestResult fb = first_best(instance);
    CHECK(fb.ties.size() == 2);
    CHECK(fb.profile == ActionProfile::all_zeros(1));  // lexicographic tie order
  }
}

TEST_CASE("first best dominates every profile") {
  SplitMix64 rng(79);
  for (int t = 0; t < 15; ++t) {
    const int n = 2 + static_cast<int>(rng.next_below(5));
    const KnownValueInstance instance = random_instance(rng, n);
    const FirstBestResult fb = first_best(instance);
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      CHECK(fb.surplus >= social_surplus(instance, ActionProfile(mask, n)) - 1e-10);
    }
  }
}

TEST_CASE("per-user first-best condition") {
  SUBCASE("diagonal: the term reduces to (1 - v) sigma^4 / (1 + sigma^2)") {
    Eigen::VectorXd vars(2);
    vars << 1.0, 2.0;
    Eigen::VectorXd values(2);
    values << 0.25, 1.5;
    const KnownValueInstance instance(GaussianMarket(vars.asDiagonal()), values);
    const FirstBestResult fb = first_best(instance);
    const FirstBestConditionReport report = verify_first_best_condition(instance, fb.profile);
    CHECK(report.consistent);
    CHECK(report.users[0].value == doctest::Approx(0.75 * 0.5).epsilon(1e-12));
    CHECK(report.users[1].value == doctest::Approx(-0.5 * 4.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("shut market: the would-be sharer's term is negative") {
    const KnownValueInstance instance = example1_instance(0.9, 0.5, 5.0);
    const FirstBestConditionReport report =
        verify_first_best_condition(instance, ActionProfile::all_zeros(2));
    CHECK(report.consistent);
    // (0.5 * 1 - 4 * 0.81) / 2 = -1.37, frozen from the prior covariance.
    CHECK(report.users[0].value == doctest::Approx(-1.37).epsilon(1e-12));
    CHECK(report.users[0].value < 0.0);
  }
  SUBCASE("holds at the brute-force argmax on random instances") {
    SplitMix64 rng(83);
    for (int t = 0; t < 40; ++t) {
      const int n = 2 + static_cast<int>(rng.next_below(5));
      const KnownValueInstance instance = random_instance(rng, n);
      const FirstBestResult fb = first_best(instance);
      const FirstBestConditionReport report = verify_first_best_condition(instance, fb.profile);
      CHECK(report.consistent);
    }
  }
  SUBCASE("the term equals the actual surplus change of a single flip") {
    SplitMix64 rng(89);
    for (int t = 0; t < 25; ++t) {
      const int n = 2 + static_cast<int>(rng.next_below(4));
      const KnownValueInstance instance = random_instance(rng, n);
      const ActionProfile a(rng.next() & ((1ULL << n) - 1), n);
      const FirstBestConditionReport report = verify_first_best_condition(instance, a);
      for (int i = 0; i < n; ++i) {
        const double delta = social_surplus(instance, a.with(i, true)) -
                             social_surplus(instance, a.with(i, false));
        CHECK(report.users[static_cast<std::size_t>(i)].value ==
              doctest::Approx(delta).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("surplus upper bound") {
  SUBCASE("all high-value users, nothing buyable: bound is zero") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.4, 0.4, 1.0;
    const KnownValueInstance instance(GaussianMarket(sigma), Eigen::Vector2d(2.0, 3.0));
    CHECK(surplus_upper_bound(instance) == 0.0);
    const StackelbergResult eq = stackelberg_equilibrium(instance);
    CHECK(social_surplus(instance, eq.outcome.profile) <= 1e-9);
  }
  SUBCASE("single low-value user") {
    const KnownValueInstance instance(GaussianMarket(Eigen::MatrixXd::Identity(1, 1)),
                                      Eigen::VectorXd::Constant(1, 0.5));
    // Virtual value below one keeps the user in the buyable set.
    CHECK(surplus_upper_bound(instance, Eigen::VectorXd::Constant(1, 1.0)) ==
          doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("bounds the equilibrium surplus on random instances") {
    SplitMix64 rng(97);
    for (int t = 0; t < 30; ++t) {
      const int n = 2 + static_cast<int>(rng.next_below(5));
      const KnownValueInstance instance = random_instance(rng, n);
      const StackelbergResult eq = stackelberg_equilibrium(instance);
      CHECK(social_surplus(instance, eq.outcome.profile) <=
            surplus_upper_bound(instance) + 1e-9);
    }
  }
}

TEST_CASE("efficiency classification") {
  SUBCASE("isolated high-value users, buyable lows: efficient") {
    Eigen::VectorXd vars = Eigen::VectorXd::Ones(3);
    Eigen::VectorXd values(3);
    values << 0.4, 2.0, 1.5;
    const KnownValueInstance instance(GaussianMarket(vars.asDiagonal()), values);
    // Virtual values: low user below 1, high users above.
    Eigen::VectorXd phi(3);
    phi << 0.8, 4.0, 3.0;
    const StackelbergResult eq = stackelberg_equilibrium(instance);
    const EfficiencyReport report = classify_efficiency(instance, eq.outcome.profile, phi);
    CHECK(report.verdict == EfficiencyVerdict::Efficient);
    CHECK(report.matched_pattern == EfficiencyPattern::IsolatedHighValue);
    CHECK(report.low_value_users == std::vector<int>{0});
    CHECK(report.high_value_users == std::vector<int>{1, 2});
    CHECK(report.virtual_low_users == std::vector<int>{0});
  }
  SUBCASE("high user tied to a buyable low user: inefficient at extreme values") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.5, 0.5, 1.0;
    const KnownValueInstance instance(GaussianMarket(sigma), Eigen::Vector2d(0.5, 50.0));
    Eigen::VectorXd phi(2);
    phi << 1.0, 100.0;
    // The platform buys the low user's data; the externality wrecks surplus.
    const EfficiencyReport report =
        classify_efficiency(instance, ActionProfile::from_bits({1, 0}), phi);
    CHECK(report.verdict == EfficiencyVerdict::Inefficient);
    CHECK(report.matched_pattern == EfficiencyPattern::HighTiedToBuyableLow);
    CHECK(report.surplus_at_equilibrium < 0.0);
    CHECK(report.first_best_surplus == 0.0);
    CHECK(report.surplus_at_equilibrium <= report.surplus_bound + 1e-9);
  }
  SUBCASE("all-low markets match the isolated-high pattern vacuously") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.3, 0.3, 1.0;
    const KnownValueInstance instance(GaussianMarket(sigma), Eigen::Vector2d(0.2, 0.4));
    const StackelbergResult eq = stackelberg_equilibrium(instance);
    const EfficiencyReport report = classify_efficiency(instance, eq.outcome.profile);
    CHECK(report.matched_pattern == EfficiencyPattern::IsolatedHighValue);
    CHECK(report.verdict == EfficiencyVerdict::Efficient);
  }
  SUBCASE("unclassified structure falls back to the direct comparison") {
    // The only correlation runs through a boundary user (v = 1 exactly, in
    // neither value class) whose rent keeps them out of the buyable set: no
    // pattern's hypotheses apply.
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.3, 0.3, 1.0;
    const KnownValueInstance instance(GaussianMarket(sigma), Eigen::Vector2d(1.0, 2.0));
    Eigen::VectorXd phi(2);
    phi << 1.5, 4.0;
    const StackelbergResult eq = stackelberg_equilibrium(instance);
    const EfficiencyReport report = classify_efficiency(instance, eq.outcome.profile, phi);
    CHECK(report.matched_pattern == EfficiencyPattern::None);
    CHECK(report.verdict == EfficiencyVerdict::Inefficient);
    CHECK(report.low_value_users.empty());
    CHECK(report.high_value_users == std::vector<int>{1});
  }
}

TEST_CASE("symmetric first best agrees with the full scan") {
  SplitMix64 rng(149);
  for (int t = 0; t < 6; ++t) {
    const int s1 = 2 + static_cast<int>(rng.next_below(3));
    const int s2 = 2 + static_cast<int>(rng.next_below(3));
    const int n = s1 + s2;
    Eigen::MatrixXd sigma(n, n);
    const double w1 = rng.uniform(0.0, 0.3);
    const double w2 = rng.uniform(0.0, 0.3);
    const double cross = rng.uniform(0.0, 0.15);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) {
          sigma(i, j) = 1.0;
        } else if ((i < s1) == (j < s1)) {
          sigma(i, j) = i < s1 ? w1 : w2;
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
    const FirstBestResult full = first_best(instance, {SymmetryMode::Off, 1e-9});
    const FirstBestResult sym = first_best(instance, {SymmetryMode::On, 1e-9});
    CHECK(full.surplus == doctest::Approx(sym.surplus).epsilon(1e-10));
    CHECK(full.profile == sym.profile);
  }
}

TEST_CASE("no externalities and low values: equilibrium is first best") {
  SplitMix64 rng(101);
  for (int t = 0; t < 10; ++t) {
    const int n = 2 + static_cast<int>(rng.next_below(4));
    Eigen::VectorXd vars(n);
    Eigen::VectorXd values(n);
    for (int i = 0; i < n; ++i) {
      vars(i) = rng.uniform(0.3, 3.0);
      values(i) = rng.uniform(0.0, 0.95);
    }
    const KnownValueInstance instance(GaussianMarket(vars.asDiagonal()), values);
    const StackelbergResult eq = stackelberg_equilibrium(instance);
    const FirstBestResult fb = first_best(instance);
    CHECK(social_surplus(instance, eq.outcome.profile) == doctest::Approx(fb.surplus).epsilon(1e-10));
    CHECK(eq.outcome.profile == fb.profile);
  }
}
