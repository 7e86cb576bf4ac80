#include "datamkt/property_suite.hpp"

#include "datamkt/rng.hpp"
#include "datamkt/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace datamkt {

namespace {

struct Recorder {
  SuiteReport report;

  void check(bool ok, const std::string& line) {
    report.lines.push_back(std::string(ok ? "ok   " : "FAIL ") + line);
    if (!ok) {
      report.passed = false;
      if (!report.first_failure) report.first_failure = line;
    }
  }
};

std::string witness_string(const StructureReport& r, int n) {
  if (!r.witness) return "";
  std::ostringstream out;
  out << " witness: user " << r.witness->user << ", a="
      << ActionProfile(r.witness->profile, n).to_string()
      << ", a'=" << ActionProfile(r.witness->profile_prime, n).to_string() << ", gap "
      << r.witness->gap;
  return out.str();
}

void structure_suite(const Scenario& scenario, Recorder& rec) {
  const GaussianMarket& market = scenario.market;
  const int n = market.size();

  const StructureReport mono = check_monotonicity(market, scenario.solver.seed);
  rec.check(mono.holds, "monotonicity (" + std::string(mono.exhaustive ? "exhaustive" : "sampled") +
                            ", " + std::to_string(mono.pairs_checked) + " pairs)" +
                            witness_string(mono, n));
  const StructureReport sub = check_submodularity(market, scenario.solver.seed);
  rec.check(sub.holds, "submodularity (" + std::string(sub.exhaustive ? "exhaustive" : "sampled") +
                           ", " + std::to_string(sub.pairs_checked) + " pairs)" +
                           witness_string(sub, n));

  // Leakage bounds and the posterior variance identity, every profile when
  // small and a deterministic sample otherwise.
  SplitMix64 rng(substream_seed(scenario.solver.seed, 0x57));
  const std::int64_t profile_samples = n <= 12 ? (1LL << n) : 512;
  bool bounds_ok = true;
  bool identity_ok = true;
  for (std::int64_t t = 0; t < profile_samples; ++t) {
    const std::uint64_t mask =
        n <= 12 ? static_cast<std::uint64_t>(t) : (rng.next() & ((1ULL << n) - 1));
    const ActionProfile a(mask, n);
    const Eigen::VectorXd leak = breached_information_all(market, a);
    for (int i = 0; i < n; ++i) {
      bounds_ok = bounds_ok && leak(i) >= -1e-10 && leak(i) <= market.variance(i) + 1e-10;
      const double cond = conditional_covariance(market, a, i, i);
      identity_ok = identity_ok && std::abs(cond + leak(i) - market.variance(i)) <= 1e-12;
    }
  }
  rec.check(bounds_ok,
            "leakage within [0, variance] on " + std::to_string(profile_samples) + " profiles");
  rec.check(identity_ok, "posterior variance identity Cov(X_i,X_i|S_A) + I_i(a) = variance(i)");
}

bool is_fixed_point(const KnownValueInstance& instance, const PriceVector& p,
                    const ActionProfile& a) {
  for (int i = 0; i < instance.size(); ++i) {
    if (best_response(instance, a, p[i], i) != a.shares(i)) return false;
  }
  return true;
}

PriceVector random_prices(const KnownValueInstance& instance, SplitMix64& rng) {
  Eigen::VectorXd p(instance.size());
  for (int i = 0; i < instance.size(); ++i) {
    const double cap = instance.values(i) * instance.market.variance(i) + 0.1;
    p(i) = rng.uniform(0.0, cap);
  }
  return PriceVector(std::move(p));
}

void equilibrium_suite(const Scenario& scenario, Recorder& rec) {
  const KnownValueInstance instance = scenario.known_instance();
  const int n = instance.size();
  SplitMix64 rng(substream_seed(scenario.solver.seed, 0xE1));

  const StackelbergResult eq = stackelberg_equilibrium(instance, scenario.solve_options());

  std::vector<PriceVector> prices;
  prices.push_back(PriceVector::zeros(n));
  prices.push_back(eq.outcome.prices);
  for (int t = 0; t < 8; ++t) prices.push_back(random_prices(instance, rng));

  bool lattice_ok = true;
  bool fixed_ok = true;
  bool extremes_ok = true;
  for (const PriceVector& p : prices) {
    const ActionProfile least = least_user_equilibrium(instance, p);
    const ActionProfile greatest = greatest_user_equilibrium(instance, p);
    lattice_ok = lattice_ok && greatest.dominates(least);
    fixed_ok = fixed_ok && is_fixed_point(instance, p, least) && is_fixed_point(instance, p, greatest);
    if (n <= 10) {
      const auto all = enumerate_user_equilibria(instance, p);
      bool contains_least = false;
      bool contains_greatest = false;
      for (const ActionProfile& a : all) {
        extremes_ok = extremes_ok && a.dominates(least) && greatest.dominates(a);
        contains_least = contains_least || a == least;
        contains_greatest = contains_greatest || a == greatest;
      }
      extremes_ok = extremes_ok && contains_least && contains_greatest && !all.empty();
    }
  }
  rec.check(lattice_ok, "least <= greatest user equilibrium at " +
                            std::to_string(prices.size()) + " price vectors");
  rec.check(fixed_ok, "least and greatest are simultaneous best-response fixed points");
  if (n <= 10) {
    rec.check(extremes_ok, "enumerated equilibria lie between the lattice extremes");
  }

  // Raising one user's price weakly raises both lattice extremes.
  bool statics_ok = true;
  for (int t = 0; t < 6; ++t) {
    const PriceVector p = random_prices(instance, rng);
    const int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    Eigen::VectorXd raised = p.vec();
    raised(i) += rng.uniform(0.0, 0.5);
    const PriceVector p_up(std::move(raised));
    statics_ok = statics_ok &&
                 least_user_equilibrium(instance, p_up).dominates(least_user_equilibrium(instance, p)) &&
                 greatest_user_equilibrium(instance, p_up).dominates(greatest_user_equilibrium(instance, p));
  }
  rec.check(statics_ok, "raising any single price weakly raises both lattice extremes");

  // Common scaling of values and prices leaves best responses unchanged.
  bool scaling_ok = true;
  for (int t = 0; t < 4; ++t) {
    const double lambda = rng.uniform(0.25, 4.0);
    const KnownValueInstance scaled(instance.market, instance.values * lambda);
    const PriceVector p = random_prices(instance, rng);
    const PriceVector p_scaled(p.vec() * lambda);
    const std::uint64_t mask = rng.next() & ((1ULL << n) - 1);
    const ActionProfile a(mask, n);
    for (int i = 0; i < n; ++i) {
      scaling_ok = scaling_ok &&
                   best_response(instance, a, p[i], i) == best_response(scaled, a, p_scaled[i], i);
    }
  }
  rec.check(scaling_ok, "scaling all values and prices together preserves best responses");

  if (n <= 4) {
    bool optimal_ok = true;
    double worst_excess = 0.0;
    for (int t = 0; t < 40; ++t) {
      const PriceVector p = random_prices(instance, rng);
      for (const ActionProfile& a : enumerate_user_equilibria(instance, p)) {
        const double payoff = make_outcome(instance, a, p).platform_payoff;
        const double excess = payoff - eq.outcome.platform_payoff;
        worst_excess = std::max(worst_excess, excess);
        optimal_ok = optimal_ok && excess <= 1e-9;
      }
    }
    std::ostringstream line;
    line << "no sampled (p, equilibrium) pair beats the platform optimum (max excess "
         << worst_excess << ")";
    rec.check(optimal_ok, line.str());
  }
}

void mechanism_suite(const Scenario& scenario, Recorder& rec, const SuiteOptions& options) {
  const int n = scenario.market.size();
  if (n > 4) {
    throw std::invalid_argument("mechanism suite runs the exhaustive misreport grid; n <= 4 only");
  }

  if (scenario.mode == ScenarioMode::Known) {
    // Known values: the truth-eliciting price scheme, misreports gridded over
    // [0, max(2 v_i, 1)].
    std::vector<ValueDistribution> supports;
    for (int i = 0; i < n; ++i) {
      supports.push_back(ValueDistribution::uniform(
          0.0, std::max(2.0 * scenario.values(i), 1.0)));
    }
    const BayesianInstance surrogate(scenario.market, supports);
    const IcReport ic = incentive_compatibility_test(surrogate, scenario.values,
                                                     MechanismKind::VcgKnownValues,
                                                     options.ic_grid_points);
    std::ostringstream line;
    line << "truth-eliciting prices: max misreport gain " << ic.max_gain << " over "
         << ic.comparisons << " comparisons";
    if (ic.worst && !ic.ok(options.ic_tolerance)) {
      line << " (user " << ic.worst->user << ", true " << ic.worst->true_value << " -> report "
           << ic.worst->misreport << ")";
    }
    rec.check(ic.ok(options.ic_tolerance), line.str());
    return;
  }

  const BayesianInstance instance = scenario.bayesian_instance();
  SplitMix64 rng(substream_seed(scenario.solver.seed, 0x3C));
  Eigen::VectorXd truth(n);
  for (int i = 0; i < n; ++i) {
    truth(i) = instance.distributions[static_cast<std::size_t>(i)].quantile(rng.uniform());
  }

  bool payments_ok = true;
  for (int t = 0; t < 8; ++t) {
    Eigen::VectorXd reports(n);
    for (int i = 0; i < n; ++i) {
      reports(i) = instance.distributions[static_cast<std::size_t>(i)].quantile(rng.uniform());
    }
    for (int i = 0; i < n; ++i) {
      payments_ok =
          payments_ok && bayesian_payment(instance, reports, i, options.payment_rule) >= 0.0;
    }
  }
  rec.check(payments_ok, "payments non-negative on sampled report vectors");

  const IcReport vcg = incentive_compatibility_test(instance, truth,
                                                    MechanismKind::VcgKnownValues,
                                                    options.ic_grid_points);
  {
    std::ostringstream line;
    line << "truth-eliciting prices: max misreport gain " << vcg.max_gain << " over "
         << vcg.comparisons << " comparisons";
    rec.check(vcg.ok(options.ic_tolerance), line.str());
  }

  const IcReport bayes =
      incentive_compatibility_test(instance, truth, MechanismKind::BayesianOptimal,
                                   options.ic_grid_points, options.payment_rule);
  {
    std::ostringstream line;
    line << "posted mechanism: max misreport gain " << bayes.max_gain << " over "
         << bayes.comparisons << " comparisons";
    if (bayes.worst && !bayes.ok(options.ic_tolerance)) {
      line << " (user " << bayes.worst->user << ", true " << bayes.worst->true_value
           << " -> report " << bayes.worst->misreport << ")";
    }
    rec.check(bayes.ok(options.ic_tolerance), line.str());
  }
}

}  // namespace

SuiteKind suite_kind_from_string(const std::string& name) {
  if (name == "structure") return SuiteKind::Structure;
  if (name == "equilibrium") return SuiteKind::Equilibrium;
  if (name == "mechanism") return SuiteKind::Mechanism;
  throw std::invalid_argument("unknown suite '" + name +
                              "' (expected structure, equilibrium or mechanism)");
}

SuiteReport run_property_suite(const Scenario& scenario, SuiteKind kind,
                               const SuiteOptions& options) {
  Recorder rec;
  switch (kind) {
    case SuiteKind::Structure:
      structure_suite(scenario, rec);
      break;
    case SuiteKind::Equilibrium:
      equilibrium_suite(scenario, rec);
      break;
    case SuiteKind::Mechanism:
      mechanism_suite(scenario, rec, options);
      break;
  }
  return rec.report;
}

}  // namespace datamkt
