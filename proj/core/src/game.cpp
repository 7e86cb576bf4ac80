#include "datamkt/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace datamkt {

namespace {

void check_prices(const KnownValueInstance& instance, const PriceVector& p) {
  if (p.size() != instance.size()) {
    throw std::invalid_argument("price vector length does not match market size");
  }
}

}  // namespace

KnownValueInstance::KnownValueInstance(GaussianMarket market_in, Eigen::VectorXd values_in)
    : market(std::move(market_in)), values(std::move(values_in)) {
  if (values.size() != market.size()) {
    throw std::invalid_argument("values length does not match market size");
  }
  for (int i = 0; i < market.size(); ++i) {
    if (!(values(i) >= 0.0)) {
      throw std::invalid_argument("privacy value of user " + std::to_string(i) +
                                  " must be non-negative");
    }
  }
}

PriceVector::PriceVector(Eigen::VectorXd p) : p_(std::move(p)) {
  for (int i = 0; i < p_.size(); ++i) {
    if (!(p_(i) >= 0.0)) {
      throw std::invalid_argument("price for user " + std::to_string(i) +
                                  " must be non-negative");
    }
  }
}

MarketOutcome make_outcome(const KnownValueInstance& instance, const ActionProfile& a,
                           const PriceVector& p) {
  check_prices(instance, p);
  const Eigen::VectorXd leak = breached_information_all(instance.market, a);
  const int n = instance.size();
  Eigen::VectorXd payoffs(n);
  double platform = leak.sum();
  double surplus = 0.0;
  for (int i = 0; i < n; ++i) {
    const double privacy_cost = instance.values(i) * leak(i);
    payoffs(i) = a.shares(i) ? p[i] - privacy_cost : -privacy_cost;
    if (a.shares(i)) platform -= p[i];
    surplus += (1.0 - instance.values(i)) * leak(i);
  }
  return {a, p, payoffs, platform, surplus};
}

double user_payoff(const KnownValueInstance& instance, const ActionProfile& a,
                   const PriceVector& p, int i) {
  check_prices(instance, p);
  const double leak = breached_information(instance.market, a, i);
  return a.shares(i) ? p[i] - instance.values(i) * leak : -instance.values(i) * leak;
}

bool best_response(const KnownValueInstance& instance, const ActionProfile& a_minus_i, double p_i,
                   int i) {
  return p_i >= instance.values(i) * marginal_leakage(instance.market, a_minus_i, i);
}

namespace {

ActionProfile simultaneous_best_response(const KnownValueInstance& instance, const PriceVector& p,
                                         const ActionProfile& current) {
  ActionProfile next = current;
  for (int i = 0; i < instance.size(); ++i) {
    next = next.with(i, best_response(instance, current, p[i], i));
  }
  return next;
}

ActionProfile iterate_to_fixed_point(const KnownValueInstance& instance, const PriceVector& p,
                                     ActionProfile current) {
  const int rounds = instance.size() + 1;
  for (int r = 0; r < rounds; ++r) {
    ActionProfile next = simultaneous_best_response(instance, p, current);
    if (next == current) return current;
    current = next;
  }
  if (simultaneous_best_response(instance, p, current) == current) return current;
  throw std::logic_error("best-response iteration did not reach a fixed point");
}

}  // namespace

ActionProfile least_user_equilibrium(const KnownValueInstance& instance, const PriceVector& p) {
  check_prices(instance, p);
  return iterate_to_fixed_point(instance, p, ActionProfile::all_zeros(instance.size()));
}

ActionProfile greatest_user_equilibrium(const KnownValueInstance& instance, const PriceVector& p) {
  check_prices(instance, p);
  return iterate_to_fixed_point(instance, p, ActionProfile::all_ones(instance.size()));
}

std::vector<ActionProfile> enumerate_user_equilibria(const KnownValueInstance& instance,
                                                     const PriceVector& p) {
  check_prices(instance, p);
  const int n = instance.size();
  if (n > kFullScanMaxUsers) {
    throw std::invalid_argument("equilibrium enumeration capped at " +
                                std::to_string(kFullScanMaxUsers) + " users");
  }
  const LeakageTable table(instance.market);
  std::vector<ActionProfile> out;
  const std::uint64_t count = 1ULL << n;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    bool equilibrium = true;
    for (int i = 0; i < n && equilibrium; ++i) {
      const double threshold = instance.values(i) * table.marginal(mask, i);
      const bool wants_to_share = p[i] >= threshold;
      if (wants_to_share != ((mask >> i) & 1ULL)) equilibrium = false;
    }
    if (equilibrium) out.emplace_back(mask, n);
  }
  std::sort(out.begin(), out.end(),
            [](const ActionProfile& a, const ActionProfile& b) { return lex_less(a, b); });
  return out;
}

PriceVector supporting_prices(const KnownValueInstance& instance, const ActionProfile& a) {
  const int n = instance.size();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (a.shares(i)) p(i) = instance.values(i) * marginal_leakage(instance.market, a, i);
  }
  return PriceVector(p);
}

EnumerationPlan plan_enumeration(const GaussianMarket& market, const std::vector<double>& user_key,
                                 SymmetryMode mode) {
  const int n = market.size();
  switch (mode) {
    case SymmetryMode::Off:
      if (n > kFullScanMaxUsers) {
        throw std::invalid_argument("full profile scan capped at " +
                                    std::to_string(kFullScanMaxUsers) + " users");
      }
      return {false, std::nullopt};
    case SymmetryMode::On: {
      auto blocks = detect_blocks(market, user_key);
      if (!blocks) {
        throw std::invalid_argument(
            "symmetry reduction requested but the instance has no valid block structure");
      }
      return {true, std::move(blocks)};
    }
    case SymmetryMode::Auto: {
      if (n <= kExhaustiveCheckMaxUsers) return {false, std::nullopt};
      auto blocks = detect_blocks(market, user_key);
      if (blocks) return {true, std::move(blocks)};
      if (n > kFullScanMaxUsers) {
        throw std::invalid_argument(
            "instance too large for a full profile scan and no block structure detected");
      }
      return {false, std::nullopt};
    }
  }
  throw std::logic_error("unreachable");
}

namespace {

struct Candidate {
  ActionProfile profile;
  double payoff;
  bool is_equilibrium;  // exact user equilibrium under tie-toward-sharing
};

// Non-sharers face price 0 and share on ties, so the candidate survives only
// when every non-sharer's threshold is strictly positive.
Candidate evaluate_candidate_full(const KnownValueInstance& instance, const LeakageTable& table,
                                  std::uint64_t mask) {
  const int n = instance.size();
  const Eigen::VectorXd& leak = table.leakage(mask);
  double payoff = leak.sum();
  bool equilibrium = true;
  for (int i = 0; i < n; ++i) {
    const double threshold = instance.values(i) * table.marginal(mask, i);
    if ((mask >> i) & 1ULL) {
      payoff -= threshold;
    } else if (!(threshold > 0.0)) {
      equilibrium = false;
    }
  }
  return {ActionProfile(mask, n), payoff, equilibrium};
}

Candidate evaluate_candidate_symmetric(const KnownValueInstance& instance,
                                       const BlockStructure& blocks,
                                       const std::vector<int>& counts) {
  const int n = instance.size();
  const ActionProfile rep = representative_profile(blocks, counts, n);
  const Eigen::VectorXd leak = breached_information_all(instance.market, rep);
  double payoff = leak.sum();
  bool equilibrium = true;
  for (std::size_t b = 0; b < blocks.members.size(); ++b) {
    const auto& members = blocks.members[b];
    const double v = instance.values(members.front());
    if (counts[b] > 0) {
      // All sharers in a block are interchangeable; price one of them.
      const int sharer = members.back();
      const double marg =
          leak(sharer) - breached_information(instance.market, rep.with(sharer, false), sharer);
      payoff -= static_cast<double>(counts[b]) * v * marg;
    }
    if (counts[b] < blocks.sizes[b]) {
      const int holdout = members.front();
      const double marg =
          breached_information(instance.market, rep.with(holdout, true), holdout) - leak(holdout);
      if (!(v * marg > 0.0)) equilibrium = false;
    }
  }
  return {rep, payoff, equilibrium};
}

}  // namespace

StackelbergResult stackelberg_equilibrium(const KnownValueInstance& instance,
                                          const SolveOptions& options) {
  const int n = instance.size();
  std::vector<double> keys(instance.values.data(), instance.values.data() + n);
  const EnumerationPlan plan = plan_enumeration(instance.market, keys, options.symmetry);

  std::vector<Candidate> candidates;
  if (plan.symmetric) {
    for_each_block_count(*plan.blocks, [&](const std::vector<int>& counts) {
      candidates.push_back(evaluate_candidate_symmetric(instance, *plan.blocks, counts));
    });
  } else {
    const LeakageTable table(instance.market);
    const std::uint64_t count = 1ULL << n;
    candidates.reserve(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      candidates.push_back(evaluate_candidate_full(instance, table, mask));
    }
  }

  double best = candidates.front().payoff;
  for (const Candidate& c : candidates) best = std::max(best, c.payoff);

  std::vector<const Candidate*> ties;
  for (const Candidate& c : candidates) {
    if (best - c.payoff <= options.tie_tolerance) ties.push_back(&c);
  }
  const bool any_equilibrium =
      std::any_of(ties.begin(), ties.end(), [](const Candidate* c) { return c->is_equilibrium; });
  const Candidate* chosen = nullptr;
  for (const Candidate* c : ties) {
    if (any_equilibrium && !c->is_equilibrium) continue;
    if (chosen == nullptr || lex_less(c->profile, chosen->profile)) chosen = c;
  }

  const PriceVector prices = supporting_prices(instance, chosen->profile);
  MarketOutcome outcome = make_outcome(instance, chosen->profile, prices);

  const ActionProfile least = least_user_equilibrium(instance, prices);
  const double least_payoff = make_outcome(instance, least, prices).platform_payoff;
  const bool risk =
      !(least == chosen->profile) && least_payoff < outcome.platform_payoff - 1e-12;

  std::vector<ActionProfile> tie_profiles;
  tie_profiles.reserve(ties.size());
  for (const Candidate* c : ties) tie_profiles.push_back(c->profile);
  std::sort(tie_profiles.begin(), tie_profiles.end(),
            [](const ActionProfile& a, const ActionProfile& b) { return lex_less(a, b); });

  return {std::move(outcome), std::move(tie_profiles), plan.symmetric, risk, least, least_payoff};
}

}  // namespace datamkt
