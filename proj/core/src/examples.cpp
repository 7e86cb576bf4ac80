#include "datamkt/examples.hpp"

#include "datamkt/csv.hpp"
#include "datamkt/scenario.hpp"
#include "datamkt/welfare.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace datamkt {

std::vector<double> example1_default_rho_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 9; ++k) grid.push_back(0.1 * k);
  return grid;
}

std::vector<Example1Row> run_example1(const std::vector<double>& rho_grid, double v) {
  std::vector<Example1Row> rows;
  rows.reserve(rho_grid.size());
  for (double rho : rho_grid) {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, rho, rho, 1.0;
    const KnownValueInstance instance(GaussianMarket(sigma), Eigen::Vector2d(v, v));
    const StackelbergResult eq = stackelberg_equilibrium(instance);

    Example1Row row{rho,
                    v * (2.0 - rho * rho) * (2.0 - rho * rho) / (2.0 * (4.0 - rho * rho)),
                    v / 2.0,
                    eq.outcome.profile,
                    eq.outcome.prices[0],
                    eq.outcome.prices[1],
                    eq.outcome.platform_payoff,
                    {},
                    false};
    const double mid = 0.5 * (row.price_low + row.price_high);
    row.equilibria_at_mid = enumerate_user_equilibria(instance, PriceVector::constant(2, mid));
    row.matches_closed_form = eq.outcome.profile == ActionProfile::all_ones(2) &&
                              std::abs(row.p0 - row.price_low) <= 1e-9 &&
                              std::abs(row.p1 - row.price_low) <= 1e-9;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string example1_csv(const std::vector<Example1Row>& rows) {
  CsvBuilder csv;
  csv.row({"rho", "price_low", "price_high", "profile", "p0", "p1", "platform_payoff",
           "equilibria_at_mid", "matches_closed_form"});
  for (const auto& r : rows) {
    std::string eqs;
    for (std::size_t k = 0; k < r.equilibria_at_mid.size(); ++k) {
      if (k) eqs += ';';
      eqs += r.equilibria_at_mid[k].to_string();
    }
    csv.row({format_double(r.rho), format_double(r.price_low), format_double(r.price_high),
             r.profile.to_string(), format_double(r.p0), format_double(r.p1),
             format_double(r.platform_payoff), eqs, r.matches_closed_form ? "1" : "0"});
  }
  return csv.str();
}

Example2Result run_example2() {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(3, 3, 0.3);
  sigma.diagonal().setOnes();
  const KnownValueInstance instance(GaussianMarket(sigma),
                                    Eigen::Vector3d(1.18, 1.18, 1.18));
  Example2Result result{stackelberg_equilibrium(instance), {}, 0.0};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const ActionProfile& tie : result.solution.ties) {
    const double payoff =
        make_outcome(instance, tie, supporting_prices(instance, tie)).platform_payoff;
    result.tie_payoffs.push_back(payoff);
    lo = std::min(lo, payoff);
    hi = std::max(hi, payoff);
  }
  result.payoff_spread = hi - lo;
  return result;
}

std::string example2_csv(const Example2Result& result) {
  CsvBuilder csv;
  csv.row({"profile", "platform_payoff", "chosen"});
  for (std::size_t k = 0; k < result.solution.ties.size(); ++k) {
    const ActionProfile& tie = result.solution.ties[k];
    csv.row({tie.to_string(), format_double(result.tie_payoffs[k]),
             tie == result.solution.outcome.profile ? "1" : "0"});
  }
  return csv.str();
}

std::vector<double> example3_default_rho_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(0.05 * k);
  return grid;
}

std::vector<double> example3_default_vh_grid() { return {1.001, 3.0}; }

std::vector<Example3Row> run_example3(const std::vector<double>& vh_grid,
                                      const std::vector<double>& rho_grid) {
  std::vector<Example3Row> rows;
  for (double vh : vh_grid) {
    for (double rho : rho_grid) {
      BlockCovarianceSpec spec;
      spec.sizes = {kExample3CommunitySize, kExample3CommunitySize};
      spec.variance = {1.0, 1.0};
      spec.within = {kExample3WithinCorrelation, kExample3WithinCorrelation};
      spec.cross = rho;
      const Eigen::MatrixXd sigma = spec.expand();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
      const double min_eig = es.eigenvalues().minCoeff();

      Example3Row row;
      row.v_high = vh;
      row.rho = rho;
      row.min_eigenvalue = min_eig;
      row.feasible = min_eig >= -1e-10;
      if (row.feasible) {
        const int n = spec.total_users();
        Eigen::VectorXd values(n);
        values.head(kExample3CommunitySize).setConstant(kExample3LowValue);
        values.tail(kExample3CommunitySize).setConstant(vh);
        const KnownValueInstance instance(GaussianMarket(sigma), values);
        const StackelbergResult eq =
            stackelberg_equilibrium(instance, {SymmetryMode::On, 1e-9});
        row.profile = eq.outcome.profile.to_string();
        for (int i = 0; i < kExample3CommunitySize; ++i) {
          row.low_sharers += eq.outcome.profile.shares(i) ? 1 : 0;
          row.high_sharers += eq.outcome.profile.shares(kExample3CommunitySize + i) ? 1 : 0;
        }
        row.platform_payoff = eq.outcome.platform_payoff;
        row.social_surplus = eq.outcome.social_surplus;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string example3_csv(const std::vector<Example3Row>& rows) {
  CsvBuilder csv;
  csv.row({"v_high", "rho", "status", "min_eigenvalue", "low_sharers", "high_sharers", "profile",
           "platform_payoff", "social_surplus"});
  for (const auto& r : rows) {
    if (r.feasible) {
      csv.row({format_double(r.v_high), format_double(r.rho), "ok",
               format_double(r.min_eigenvalue), std::to_string(r.low_sharers),
               std::to_string(r.high_sharers), r.profile, format_double(r.platform_payoff),
               format_double(r.social_surplus)});
    } else {
      csv.row({format_double(r.v_high), format_double(r.rho), "non-psd",
               format_double(r.min_eigenvalue), "", "", "", "", ""});
    }
  }
  return csv.str();
}

}  // namespace datamkt
