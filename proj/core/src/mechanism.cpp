#include "datamkt/mechanism.hpp"

#include "datamkt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace datamkt {

namespace {

void check_reports(int n, const Eigen::VectorXd& reports) {
  if (reports.size() != n) {
    throw std::invalid_argument("report vector length does not match market size");
  }
}

}  // namespace

BayesianInstance::BayesianInstance(GaussianMarket market_in,
                                   std::vector<ValueDistribution> distributions_in)
    : market(std::move(market_in)), distributions(std::move(distributions_in)) {
  if (static_cast<int>(distributions.size()) != market.size()) {
    throw std::invalid_argument("need one valuation distribution per user");
  }
}

Eigen::VectorXd virtual_values(const BayesianInstance& instance, const Eigen::VectorXd& reports) {
  check_reports(instance.size(), reports);
  Eigen::VectorXd phi(instance.size());
  for (int i = 0; i < instance.size(); ++i) {
    phi(i) = instance.distributions[static_cast<std::size_t>(i)].virtual_value(reports(i));
  }
  return phi;
}

namespace {

// Mathematically tied profiles (e.g. symmetric relabelings) differ by a few
// ulps when computed through different index orders; ties are collected in a
// narrow band before the lexicographic pick so the result does not depend on
// that noise.
double tie_band(double best) { return 1e-12 * std::max(1.0, std::abs(best)); }

// argmax over the table of sum_i w_i * I_i(a), lex-smallest on ties.
ActionProfile weighted_leakage_argmax(const LeakageTable& table, const Eigen::VectorXd& weights) {
  const int n = table.size();
  const std::uint64_t count = 1ULL << n;
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    best = std::max(best, weights.dot(table.leakage(mask)));
  }
  std::optional<ActionProfile> chosen;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (weights.dot(table.leakage(mask)) < best - tie_band(best)) continue;
    const ActionProfile candidate(mask, n);
    if (!chosen || lex_less(candidate, *chosen)) chosen = candidate;
  }
  return *chosen;
}

}  // namespace

VcgResult vcg_prices(const GaussianMarket& market, const Eigen::VectorXd& reports) {
  const int n = market.size();
  check_reports(n, reports);
  if (n > kFullScanMaxUsers) {
    throw std::invalid_argument("truth-eliciting price computation capped at " +
                                std::to_string(kFullScanMaxUsers) + " users");
  }
  const LeakageTable table(market);
  const Eigen::VectorXd welfare_weights = 1.0 - reports.array();
  const ActionProfile allocation = weighted_leakage_argmax(table, welfare_weights);

  const std::uint64_t count = 1ULL << n;
  Eigen::VectorXd prices(n);
  for (int i = 0; i < n; ++i) {
    // h_i weights: 1 for user i, (1 - v_j) for everyone else.
    Eigen::VectorXd w = welfare_weights;
    w(i) = 1.0;
    const double at_allocation = w.dot(table.leakage(allocation.mask()));
    double h_min = at_allocation;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      h_min = std::min(h_min, w.dot(table.leakage(mask)));
    }
    const double p = at_allocation - h_min;
    if (p < -1e-9) {
      throw std::logic_error("truth-eliciting price came out negative");
    }
    prices(i) = std::max(0.0, p);
  }
  return {allocation, PriceVector(std::move(prices))};
}

namespace {

// Objective of the Bayesian allocation at one profile.
double bayesian_objective(const LeakageTable& table, const Eigen::VectorXd& phi,
                          std::uint64_t mask) {
  const int n = table.size();
  const Eigen::VectorXd& leak = table.leakage(mask);
  double value = leak.sum();
  for (int i = 0; i < n; ++i) {
    if ((mask >> i) & 1ULL) {
      value -= phi(i) * (leak(i) - table.leakage(mask & ~(1ULL << i), i));
    }
  }
  return value;
}

ActionProfile bayesian_allocation_full(const LeakageTable& table, const Eigen::VectorXd& phi) {
  const int n = table.size();
  const std::uint64_t count = 1ULL << n;
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    best = std::max(best, bayesian_objective(table, phi, mask));
  }
  std::optional<ActionProfile> chosen;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (bayesian_objective(table, phi, mask) < best - tie_band(best)) continue;
    const ActionProfile candidate(mask, n);
    if (!chosen || lex_less(candidate, *chosen)) chosen = candidate;
  }
  return *chosen;
}

ActionProfile bayesian_allocation_symmetric(const BayesianInstance& instance,
                                            const BlockStructure& blocks,
                                            const Eigen::VectorXd& phi) {
  const int n = instance.size();
  const auto objective = [&](const std::vector<int>& counts, const ActionProfile& rep) {
    const Eigen::VectorXd leak = breached_information_all(instance.market, rep);
    double value = leak.sum();
    for (std::size_t b = 0; b < blocks.members.size(); ++b) {
      if (counts[b] == 0) continue;
      const int sharer = blocks.members[b].back();
      const double marg =
          leak(sharer) - breached_information(instance.market, rep.with(sharer, false), sharer);
      value -= static_cast<double>(counts[b]) * phi(sharer) * marg;
    }
    return value;
  };
  double best = -std::numeric_limits<double>::infinity();
  for_each_block_count(blocks, [&](const std::vector<int>& counts) {
    best = std::max(best, objective(counts, representative_profile(blocks, counts, n)));
  });
  std::optional<ActionProfile> chosen;
  for_each_block_count(blocks, [&](const std::vector<int>& counts) {
    const ActionProfile rep = representative_profile(blocks, counts, n);
    if (objective(counts, rep) < best - tie_band(best)) return;
    if (!chosen || lex_less(rep, *chosen)) chosen = rep;
  });
  return *chosen;
}

EnumerationPlan plan_bayesian(const BayesianInstance& instance, const Eigen::VectorXd& reports,
                              SymmetryMode mode) {
  const int n = instance.size();
  std::vector<double> keys(reports.data(), reports.data() + n);
  EnumerationPlan plan = plan_enumeration(instance.market, keys, mode);
  if (plan.symmetric) {
    // Interchangeable users must also draw from the same distribution.
    for (const auto& members : plan.blocks->members) {
      for (int m : members) {
        if (!(instance.distributions[static_cast<std::size_t>(m)] ==
              instance.distributions[static_cast<std::size_t>(members.front())])) {
          if (mode == SymmetryMode::On) {
            throw std::invalid_argument(
                "symmetry reduction requested but distributions differ inside a block");
          }
          if (n > kFullScanMaxUsers) {
            throw std::invalid_argument(
                "instance too large for a full profile scan and blocks have mixed distributions");
          }
          return {false, std::nullopt};
        }
      }
    }
  }
  return plan;
}

}  // namespace

ActionProfile bayesian_allocation(const BayesianInstance& instance, const Eigen::VectorXd& reports,
                                  const SolveOptions& options) {
  check_reports(instance.size(), reports);
  const Eigen::VectorXd phi = virtual_values(instance, reports);
  const EnumerationPlan plan = plan_bayesian(instance, reports, options.symmetry);
  if (plan.symmetric) {
    return bayesian_allocation_symmetric(instance, *plan.blocks, phi);
  }
  const LeakageTable table(instance.market);
  return bayesian_allocation_full(table, phi);
}

namespace {

constexpr int kBreakpointScanSegments = 256;
constexpr double kBreakpointTol = 1e-10;

struct PaymentEvaluator {
  const BayesianInstance& instance;
  const LeakageTable& table;
  Eigen::VectorXd reports;  // copy; user i's slot is overwritten per x
  int user;

  ActionProfile allocation_at(double x) {
    reports(user) = x;
    Eigen::VectorXd phi(instance.size());
    for (int j = 0; j < instance.size(); ++j) {
      phi(j) = instance.distributions[static_cast<std::size_t>(j)].virtual_value(reports(j));
    }
    return bayesian_allocation_full(table, phi);
  }

  // Own-signal marginal of the sharer at the induced allocation; zero when
  // the user's bit is off.
  double g_at(const ActionProfile& a) const {
    if (!a.shares(user)) return 0.0;
    const std::uint64_t mask = a.mask();
    return table.leakage(mask, user) - table.leakage(mask & ~(1ULL << user), user);
  }
};

double bayesian_payment_impl(const BayesianInstance& instance, const LeakageTable& table,
                             const Eigen::VectorXd& reports, int i, PaymentRule rule) {
  const double v = reports(i);
  const double v_max = instance.distributions[static_cast<std::size_t>(i)].support_hi();
  if (v < instance.distributions[static_cast<std::size_t>(i)].support_lo() - 1e-12 ||
      v > v_max + 1e-12) {
    throw std::domain_error("report of user " + std::to_string(i) + " lies outside the support");
  }
  PaymentEvaluator eval{instance, table, reports, i};

  double integral = 0.0;
  if (v_max > v) {
    // Locate allocation-change thresholds: scan, then bisect every segment
    // whose endpoints disagree.
    std::vector<double> cuts;
    cuts.push_back(v);
    const double width = (v_max - v) / kBreakpointScanSegments;
    ActionProfile prev = eval.allocation_at(v);
    for (int s = 1; s <= kBreakpointScanSegments; ++s) {
      const double x = (s == kBreakpointScanSegments) ? v_max : v + width * s;
      ActionProfile cur = eval.allocation_at(x);
      if (!(cur == prev)) {
        double lo = x - width;
        double hi = x;
        while (hi - lo > kBreakpointTol) {
          const double mid = 0.5 * (lo + hi);
          if (eval.allocation_at(mid) == prev) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        cuts.push_back(0.5 * (lo + hi));
        prev = cur;
      }
    }
    cuts.push_back(v_max);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double len = cuts[k + 1] - cuts[k];
      if (len <= 0.0) continue;
      const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      integral += eval.g_at(eval.allocation_at(mid)) * len;
    }
  }

  double payment = integral;
  if (rule == PaymentRule::Standard) {
    payment += v * eval.g_at(eval.allocation_at(v));
  }
  if (payment < -1e-12) {
    throw std::logic_error("mechanism payment came out negative");
  }
  return std::max(0.0, payment);
}

}  // namespace

double bayesian_payment(const BayesianInstance& instance, const Eigen::VectorXd& reports, int i,
                        PaymentRule rule) {
  check_reports(instance.size(), reports);
  if (i < 0 || i >= instance.size()) {
    throw std::invalid_argument("user index out of range");
  }
  if (instance.size() > kFullScanMaxUsers) {
    throw std::invalid_argument("payment computation capped at " +
                                std::to_string(kFullScanMaxUsers) + " users");
  }
  const LeakageTable table(instance.market);
  return bayesian_payment_impl(instance, table, reports, i, rule);
}

MechanismOutcome bayesian_outcome(const BayesianInstance& instance, const Eigen::VectorXd& reports,
                                  const SolveOptions& options) {
  check_reports(instance.size(), reports);
  const int n = instance.size();
  const ActionProfile allocation = bayesian_allocation(instance, reports, options);
  const LeakageTable table(instance.market);
  Eigen::VectorXd payments(n);
  for (int i = 0; i < n; ++i) {
    payments(i) = bayesian_payment_impl(instance, table, reports, i, PaymentRule::Standard);
  }
  const Eigen::VectorXd leak = breached_information_all(instance.market, allocation);
  double platform = leak.sum();
  for (int i = 0; i < n; ++i) {
    if (allocation.shares(i)) platform -= payments(i);
  }
  return {reports, allocation, PriceVector(std::move(payments)), platform,
          virtual_values(instance, reports)};
}

MechanismOutcome vcg_outcome(const GaussianMarket& market, const Eigen::VectorXd& reports) {
  VcgResult res = vcg_prices(market, reports);
  const Eigen::VectorXd leak = breached_information_all(market, res.allocation);
  double platform = leak.sum();
  for (int i = 0; i < market.size(); ++i) {
    if (res.allocation.shares(i)) platform -= res.prices[i];
  }
  // Known reports carry no information rent.
  return {reports, res.allocation, res.prices, platform, reports};
}

McEstimate expected_platform_payoff(const BayesianInstance& instance, std::int64_t sample_count,
                                    std::uint64_t seed) {
  if (sample_count < 1) {
    throw std::invalid_argument("sample count must be positive");
  }
  const int n = instance.size();
  if (n > kFullScanMaxUsers) {
    throw std::invalid_argument("expected payoff estimation capped at " +
                                std::to_string(kFullScanMaxUsers) + " users");
  }
  const LeakageTable table(instance.market);
  const std::uint64_t count = 1ULL << n;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t s = 0; s < sample_count; ++s) {
    Eigen::VectorXd phi(n);
    for (int i = 0; i < n; ++i) {
      SplitMix64 rng(substream_seed(seed, static_cast<std::uint64_t>(s),
                                    static_cast<std::uint64_t>(i)));
      const double v =
          instance.distributions[static_cast<std::size_t>(i)].quantile(rng.uniform());
      phi(i) = instance.distributions[static_cast<std::size_t>(i)].virtual_value(v);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      best = std::max(best, bayesian_objective(table, phi, mask));
    }
    const double delta = best - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (best - mean);
  }
  const double variance = sample_count > 1 ? m2 / static_cast<double>(sample_count - 1) : 0.0;
  const double std_error =
      sample_count > 1 ? std::sqrt(variance / static_cast<double>(sample_count)) : 0.0;
  return {mean, std_error, sample_count, seed};
}

double expected_platform_payoff_quadrature(const BayesianInstance& instance, int points_per_axis) {
  const int n = instance.size();
  if (n > 3) {
    throw std::invalid_argument("quadrature mode supports up to 3 users");
  }
  if (points_per_axis < 1) {
    throw std::invalid_argument("points_per_axis must be positive");
  }
  for (const auto& d : instance.distributions) {
    if (d.has_atoms()) {
      throw std::invalid_argument("quadrature mode requires atom-free distributions");
    }
  }
  const LeakageTable table(instance.market);
  const std::uint64_t count = 1ULL << n;

  std::vector<std::vector<double>> nodes(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& d = instance.distributions[static_cast<std::size_t>(i)];
    const double w = (d.support_hi() - d.support_lo()) / points_per_axis;
    for (int k = 0; k < points_per_axis; ++k) {
      const double x = d.support_lo() + (k + 0.5) * w;
      nodes[static_cast<std::size_t>(i)].push_back(x);
      weights[static_cast<std::size_t>(i)].push_back(d.pdf(x) * w);
    }
  }

  double total = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd phi(n);
  while (true) {
    double weight = 1.0;
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const auto ki = static_cast<std::size_t>(idx[ui]);
      phi(i) = instance.distributions[ui].virtual_value(nodes[ui][ki]);
      weight *= weights[ui][ki];
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      best = std::max(best, bayesian_objective(table, phi, mask));
    }
    total += best * weight;

    std::size_t b = 0;
    while (b < idx.size()) {
      if (++idx[b] < points_per_axis) break;
      idx[b] = 0;
      ++b;
    }
    if (b == idx.size()) break;
  }
  return total;
}

IcReport incentive_compatibility_test(const BayesianInstance& instance,
                                      const Eigen::VectorXd& true_values, MechanismKind kind,
                                      int grid_points, PaymentRule rule) {
  const int n = instance.size();
  check_reports(n, true_values);
  if (n > 4) {
    throw std::invalid_argument("exhaustive misreport grid capped at 4 users");
  }
  if (grid_points < 2) {
    throw std::invalid_argument("misreport grid needs at least 2 points");
  }
  const LeakageTable table(instance.market);

  IcReport report;
  for (int i = 0; i < n; ++i) {
    const auto& dist = instance.distributions[static_cast<std::size_t>(i)];
    std::vector<double> grid(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k) {
      grid[static_cast<std::size_t>(k)] =
          dist.support_lo() +
          (dist.support_hi() - dist.support_lo()) * k / (grid_points - 1);
    }

    // Payment and own leakage for every possible report of user i, others
    // fixed at their true values.
    std::vector<double> pay(grid.size());
    std::vector<double> own_leak(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      Eigen::VectorXd reports = true_values;
      reports(i) = grid[k];
      if (kind == MechanismKind::VcgKnownValues) {
        const VcgResult res = vcg_prices(instance.market, reports);
        pay[k] = res.prices[i];
        own_leak[k] = table.leakage(res.allocation.mask(), i);
      } else {
        const ActionProfile a = bayesian_allocation(instance, reports,
                                                    {SymmetryMode::Off, 1e-9});
        pay[k] = bayesian_payment_impl(instance, table, reports, i, rule);
        own_leak[k] = table.leakage(a.mask(), i);
      }
    }

    for (std::size_t t = 0; t < grid.size(); ++t) {
      const double truth_payoff = pay[t] - grid[t] * own_leak[t];
      for (std::size_t r = 0; r < grid.size(); ++r) {
        const double deviation_payoff = pay[r] - grid[t] * own_leak[r];
        ++report.comparisons;
        const double gain = deviation_payoff - truth_payoff;
        if (gain > report.max_gain) {
          report.max_gain = gain;
          report.worst = IcViolation{i, grid[t], grid[r], gain};
        }
      }
    }
  }
  return report;
}

}  // namespace datamkt
