#include "datamkt/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace datamkt {

double social_surplus(const KnownValueInstance& instance, const ActionProfile& a) {
  const Eigen::VectorXd leak = breached_information_all(instance.market, a);
  return ((1.0 - instance.values.array()) * leak.array()).sum();
}

FirstBestResult first_best(const KnownValueInstance& instance, const SolveOptions& options) {
  const int n = instance.size();
  std::vector<double> keys(instance.values.data(), instance.values.data() + n);
  const EnumerationPlan plan = plan_enumeration(instance.market, keys, options.symmetry);

  std::vector<std::pair<ActionProfile, double>> candidates;
  if (plan.symmetric) {
    for_each_block_count(*plan.blocks, [&](const std::vector<int>& counts) {
      const ActionProfile rep = representative_profile(*plan.blocks, counts, n);
      candidates.emplace_back(rep, social_surplus(instance, rep));
    });
  } else {
    const LeakageTable table(instance.market);
    const std::uint64_t count = 1ULL << n;
    candidates.reserve(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      const double s = ((1.0 - instance.values.array()) * table.leakage(mask).array()).sum();
      candidates.emplace_back(ActionProfile(mask, n), s);
    }
  }

  double best = candidates.front().second;
  for (const auto& [profile, s] : candidates) best = std::max(best, s);

  std::vector<ActionProfile> ties;
  for (const auto& [profile, s] : candidates) {
    if (best - s <= options.tie_tolerance) ties.push_back(profile);
  }
  std::sort(ties.begin(), ties.end(),
            [](const ActionProfile& a, const ActionProfile& b) { return lex_less(a, b); });

  const ActionProfile chosen = ties.front();
  return {chosen, social_surplus(instance, chosen), std::move(ties), plan.symmetric};
}

FirstBestConditionReport verify_first_best_condition(const KnownValueInstance& instance,
                                                     const ActionProfile& a, double tol) {
  const int n = instance.size();
  FirstBestConditionReport report;
  report.consistent = true;
  report.users.reserve(n);
  for (int i = 0; i < n; ++i) {
    const ActionProfile base = a.with(i, false);
    const Eigen::MatrixXd cond = conditional_covariance_matrix(instance.market, base);
    const double denom = 1.0 + cond(i, i);  // 1 + variance(i) - I_i(base)
    if (denom < 1.0 - 1e-9) {
      throw std::logic_error("conditional variance fell below zero; leakage exceeded the prior");
    }
    double numerator = 0.0;
    for (int j = 0; j < n; ++j) {
      numerator += (1.0 - instance.values(j)) * cond(i, j) * cond(i, j);
    }
    const double value = numerator / denom;
    const bool consistent = a.shares(i) ? value >= -tol : value < tol;
    report.users.push_back({i, value, consistent});
    report.consistent = report.consistent && consistent;
  }
  return report;
}

double surplus_upper_bound(const KnownValueInstance& instance,
                           const std::optional<Eigen::VectorXd>& phi) {
  const int n = instance.size();
  const Eigen::VectorXd& rent = phi.has_value() ? *phi : instance.values;
  if (rent.size() != n) {
    throw std::invalid_argument("virtual value vector length does not match market size");
  }
  ActionProfile virtual_low = ActionProfile::all_zeros(n);
  for (int i = 0; i < n; ++i) {
    if (rent(i) <= 1.0) virtual_low = virtual_low.with(i, true);
  }
  const Eigen::VectorXd leak_all =
      breached_information_all(instance.market, ActionProfile::all_ones(n));
  const Eigen::VectorXd leak_virtual_low = breached_information_all(instance.market, virtual_low);
  double bound = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = instance.values(i);
    if (v < 1.0) bound += (1.0 - v) * leak_all(i);
    if (v > 1.0) bound -= (v - 1.0) * leak_virtual_low(i);
  }
  return bound;
}

const char* to_string(EfficiencyVerdict verdict) {
  switch (verdict) {
    case EfficiencyVerdict::Efficient: return "efficient";
    case EfficiencyVerdict::Inefficient: return "inefficient";
    case EfficiencyVerdict::Indeterminate: return "indeterminate";
  }
  return "?";
}

const char* to_string(EfficiencyPattern pattern) {
  switch (pattern) {
    case EfficiencyPattern::IsolatedHighValue: return "isolated-high-value";
    case EfficiencyPattern::HighTiedToBuyableLow: return "high-tied-to-buyable-low";
    case EfficiencyPattern::HighTiedToUnbuyableLow: return "high-tied-to-unbuyable-low";
    case EfficiencyPattern::CorrelatedHighGroup: return "correlated-high-group";
    case EfficiencyPattern::None: return "none";
  }
  return "?";
}

namespace {

constexpr double kZeroCorrelationTol = 1e-12;

bool correlated(const GaussianMarket& market, int i, int j) {
  return std::abs(market.covariance(i, j)) > kZeroCorrelationTol;
}

}  // namespace

EfficiencyReport classify_efficiency(const KnownValueInstance& instance,
                                     const ActionProfile& equilibrium_profile,
                                     const std::optional<Eigen::VectorXd>& phi,
                                     const SolveOptions& options) {
  const int n = instance.size();
  const Eigen::VectorXd& rent = phi.has_value() ? *phi : instance.values;
  if (rent.size() != n) {
    throw std::invalid_argument("virtual value vector length does not match market size");
  }

  EfficiencyReport report;
  for (int i = 0; i < n; ++i) {
    if (instance.values(i) < 1.0) report.low_value_users.push_back(i);
    if (instance.values(i) > 1.0) report.high_value_users.push_back(i);
    if (rent(i) <= 1.0) report.virtual_low_users.push_back(i);
  }

  report.surplus_at_equilibrium = social_surplus(instance, equilibrium_profile);
  report.first_best_surplus = first_best(instance, options).surplus;
  report.surplus_bound = surplus_upper_bound(instance, phi);
  report.verdict = report.first_best_surplus - report.surplus_at_equilibrium <= 1e-9
                       ? EfficiencyVerdict::Efficient
                       : EfficiencyVerdict::Inefficient;

  const auto& high = report.high_value_users;
  const auto& low = report.low_value_users;
  const auto& vlow = report.virtual_low_users;
  std::vector<bool> is_vlow(n, false);
  for (int i : vlow) is_vlow[static_cast<std::size_t>(i)] = true;

  const bool high_isolated = std::all_of(high.begin(), high.end(), [&](int h) {
    for (int j = 0; j < n; ++j) {
      if (j != h && correlated(instance.market, h, j)) return false;
    }
    return true;
  });
  const bool low_equals_vlow = low == vlow;

  const bool high_tied_to_vlow = std::any_of(high.begin(), high.end(), [&](int h) {
    return std::any_of(vlow.begin(), vlow.end(),
                       [&](int j) { return j != h && correlated(instance.market, h, j); });
  });

  const bool high_clear_of_vlow = !high_tied_to_vlow;
  const bool unbuyable_low_tied_to_high = std::any_of(low.begin(), low.end(), [&](int i) {
    if (is_vlow[static_cast<std::size_t>(i)]) return false;
    return std::any_of(high.begin(), high.end(),
                       [&](int h) { return correlated(instance.market, i, h); });
  });

  const bool high_clear_of_low = std::all_of(high.begin(), high.end(), [&](int h) {
    return std::none_of(low.begin(), low.end(),
                        [&](int j) { return correlated(instance.market, h, j); });
  });
  const bool high_pair_correlated = [&] {
    for (std::size_t x = 0; x < high.size(); ++x) {
      for (std::size_t y = x + 1; y < high.size(); ++y) {
        if (correlated(instance.market, high[x], high[y])) return true;
      }
    }
    return false;
  }();

  if (high_isolated && low_equals_vlow) {
    report.matched_pattern = EfficiencyPattern::IsolatedHighValue;
  } else if (high_tied_to_vlow) {
    report.matched_pattern = EfficiencyPattern::HighTiedToBuyableLow;
  } else if (high_clear_of_vlow && unbuyable_low_tied_to_high) {
    report.matched_pattern = EfficiencyPattern::HighTiedToUnbuyableLow;
  } else if (high_clear_of_low && high_pair_correlated) {
    report.matched_pattern = EfficiencyPattern::CorrelatedHighGroup;
  } else {
    report.matched_pattern = EfficiencyPattern::None;
  }

  return report;
}

}  // namespace datamkt
