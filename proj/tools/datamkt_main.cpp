// Command-line front end: solve scenarios, reproduce the canned examples,
// run parameter sweeps and property suites.
//
// Exit codes: 0 success, 1 validation error, 2 property-suite failure.

#include "datamkt/csv.hpp"
#include "datamkt/examples.hpp"
#include "datamkt/mechanism.hpp"
#include "datamkt/property_suite.hpp"
#include "datamkt/rng.hpp"
#include "datamkt/scenario.hpp"
#include "datamkt/sweep.hpp"
#include "datamkt/version.hpp"
#include "datamkt/welfare.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace datamkt;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> tol;
  std::optional<std::int64_t> samples;
};

Scenario load_and_print(const std::string& path, const GlobalFlags& flags) {
  Scenario scenario = load_scenario_file(path);
  if (flags.seed) scenario.solver.seed = *flags.seed;
  if (flags.tol) scenario.solver.tie_tolerance = *flags.tol;
  if (flags.samples) scenario.solver.mc_samples = *flags.samples;
  std::cout << "resolved scenario: " << scenario.resolved_json().dump() << "\n";
  return scenario;
}

void print_vector(std::ostream& out, const char* label, const Eigen::VectorXd& v) {
  out << label << " [";
  for (int i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    out << format_double(v(i));
  }
  out << "]\n";
}

void write_outcome_csv(const Scenario& scenario, const std::string& path) {
  CsvBuilder csv;
  csv.row(outcome_csv_header());
  csv.row(outcome_csv_fields(scenario));
  write_file(path, csv.str());
  std::cout << "wrote " << path << "\n";
}

int cmd_solve(const std::string& scenario_path, const GlobalFlags& flags) {
  const Scenario scenario = load_and_print(scenario_path, flags);
  const KnownValueInstance instance = scenario.known_instance();
  const StackelbergResult eq = stackelberg_equilibrium(instance, scenario.solve_options());

  std::cout << "profile            " << eq.outcome.profile.to_string() << "\n";
  print_vector(std::cout, "prices            ", eq.outcome.prices.vec());
  print_vector(std::cout, "user payoffs      ", eq.outcome.user_payoffs);
  std::cout << "platform payoff    " << format_double(eq.outcome.platform_payoff) << "\n";
  std::cout << "social surplus     " << format_double(eq.outcome.social_surplus) << "\n";
  if (eq.ties.size() > 1) {
    std::cout << "payoff ties        ";
    for (std::size_t k = 0; k < eq.ties.size(); ++k) {
      if (k) std::cout << " ";
      std::cout << eq.ties[k].to_string();
    }
    std::cout << " (lexicographic tie order)\n";
  }
  if (eq.coordination_risk) {
    std::cout << "coordination risk: least equilibrium " << eq.least_equilibrium.to_string()
              << " yields platform payoff " << format_double(eq.least_equilibrium_payoff) << "\n";
  }
  if (!flags.out.empty()) write_outcome_csv(scenario, flags.out);
  return 0;
}

int cmd_first_best(const std::string& scenario_path, const GlobalFlags& flags) {
  const Scenario scenario = load_and_print(scenario_path, flags);
  const KnownValueInstance instance = scenario.known_instance();
  const FirstBestResult fb = first_best(instance, scenario.solve_options());
  std::cout << "first-best profile " << fb.profile.to_string() << "\n";
  std::cout << "first-best surplus " << format_double(fb.surplus) << "\n";
  const FirstBestConditionReport cond = verify_first_best_condition(instance, fb.profile);
  std::cout << "per-user surplus change from switching the bit on:\n";
  for (const auto& u : cond.users) {
    std::cout << "  user " << u.user << ": " << format_double(u.value)
              << (u.consistent ? "" : "  [inconsistent]") << "\n";
  }
  std::cout << "condition " << (cond.consistent ? "consistent" : "INCONSISTENT") << "\n";
  if (!flags.out.empty()) write_outcome_csv(scenario, flags.out);
  return 0;
}

Eigen::VectorXd parse_reports(const std::string& csv, int n) {
  Eigen::VectorXd out(n);
  std::stringstream ss(csv);
  std::string item;
  int k = 0;
  while (std::getline(ss, item, ',')) {
    if (k >= n) throw ScenarioError("--report: too many entries (expected " + std::to_string(n) + ")");
    out(k++) = std::stod(item);
  }
  if (k != n) throw ScenarioError("--report: expected " + std::to_string(n) + " entries");
  return out;
}

int cmd_mechanism(const std::string& scenario_path, const std::string& scheme,
                  const std::string& report_csv, const GlobalFlags& flags) {
  const Scenario scenario = load_and_print(scenario_path, flags);
  const int n = scenario.market.size();

  if (scheme == "vcg") {
    Eigen::VectorXd reports;
    if (!report_csv.empty()) {
      reports = parse_reports(report_csv, n);
    } else if (scenario.mode == ScenarioMode::Known) {
      reports = scenario.values;
    } else {
      throw ScenarioError("vcg scheme on a bayesian scenario needs --report values");
    }
    const MechanismOutcome outcome = vcg_outcome(scenario.market, reports);
    print_vector(std::cout, "reports           ", outcome.reports);
    std::cout << "allocation         " << outcome.allocation.to_string() << "\n";
    print_vector(std::cout, "prices            ", outcome.payments.vec());
    std::cout << "platform payoff    " << format_double(outcome.platform_payoff) << "\n";
    return 0;
  }

  // Distribution-based optimal mechanism.
  const BayesianInstance instance = scenario.bayesian_instance();
  Eigen::VectorXd reports(n);
  if (!report_csv.empty()) {
    reports = parse_reports(report_csv, n);
  } else {
    SplitMix64 rng(substream_seed(scenario.solver.seed, 0xCC));
    for (int i = 0; i < n; ++i) {
      reports(i) = instance.distributions[static_cast<std::size_t>(i)].quantile(rng.uniform());
    }
    std::cout << "reports sampled from the distributions (seed " << scenario.solver.seed << ")\n";
  }
  const MechanismOutcome outcome = bayesian_outcome(instance, reports, scenario.solve_options());
  print_vector(std::cout, "reports           ", outcome.reports);
  print_vector(std::cout, "virtual values    ", outcome.virtual_values);
  std::cout << "allocation         " << outcome.allocation.to_string() << "\n";
  print_vector(std::cout, "payments          ", outcome.payments.vec());
  std::cout << "platform payoff    " << format_double(outcome.platform_payoff) << "\n";

  const McEstimate expected =
      expected_platform_payoff(instance, scenario.solver.mc_samples, scenario.solver.seed);
  std::cout << "expected platform payoff " << format_double(expected.mean) << " (std error "
            << format_double(expected.std_error) << ", " << expected.samples << " samples, seed "
            << expected.seed << ")\n";
  if (n <= 3) {
    bool atom_free = true;
    for (const auto& d : instance.distributions) atom_free = atom_free && !d.has_atoms();
    if (atom_free) {
      std::cout << "expected platform payoff (quadrature) "
                << format_double(expected_platform_payoff_quadrature(instance)) << "\n";
    }
  }
  return 0;
}

int cmd_example(int which, const std::string& rho_grid_csv, const std::string& vh_grid_csv,
                double v, const GlobalFlags& flags) {
  const auto parse_grid = [](const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
  };

  std::string csv;
  if (which == 1) {
    const std::vector<double> grid =
        rho_grid_csv.empty() ? example1_default_rho_grid() : parse_grid(rho_grid_csv);
    const auto rows = run_example1(grid, v);
    csv = example1_csv(rows);
    for (const auto& r : rows) {
      std::cout << "rho " << format_double(r.rho) << ": profile " << r.profile.to_string()
                << ", price " << format_double(r.p0) << ", bracket ["
                << format_double(r.price_low) << ", " << format_double(r.price_high) << "], "
                << r.equilibria_at_mid.size() << " equilibria at the midpoint price"
                << (r.matches_closed_form ? "" : "  [closed-form MISMATCH]") << "\n";
    }
  } else if (which == 2) {
    const Example2Result result = run_example2();
    csv = example2_csv(result);
    std::cout << "optimal profiles (payoff spread " << format_double(result.payoff_spread)
              << "):\n";
    for (std::size_t k = 0; k < result.solution.ties.size(); ++k) {
      std::cout << "  " << result.solution.ties[k].to_string() << " payoff "
                << format_double(result.tie_payoffs[k]) << "\n";
    }
    std::cout << "chosen " << result.solution.outcome.profile.to_string()
              << " (lexicographic tie order)\n";
  } else if (which == 3) {
    const std::vector<double> rho_grid =
        rho_grid_csv.empty() ? example3_default_rho_grid() : parse_grid(rho_grid_csv);
    const std::vector<double> vh_grid =
        vh_grid_csv.empty() ? example3_default_vh_grid() : parse_grid(vh_grid_csv);
    const auto rows = run_example3(vh_grid, rho_grid);
    csv = example3_csv(rows);
    for (const auto& r : rows) {
      std::cout << "v_h " << format_double(r.v_high) << " rho " << format_double(r.rho) << ": ";
      if (r.feasible) {
        std::cout << "surplus " << format_double(r.social_surplus) << " (sharers " << r.low_sharers
                  << " low, " << r.high_sharers << " high)\n";
      } else {
        std::cout << "infeasible, covariance not PSD (min eigenvalue "
                  << format_double(r.min_eigenvalue) << ")\n";
      }
    }
  } else {
    throw ScenarioError("example: expected 1, 2 or 3");
  }
  if (!flags.out.empty()) {
    write_file(flags.out, csv);
    std::cout << "wrote " << flags.out << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& spec_path, const GlobalFlags& flags) {
  const SweepSpec spec = load_sweep_spec_file(spec_path);
  std::cout << "resolved scenario template: " << scenario_from_json(spec.scenario).resolved_json().dump()
            << "\n";
  const std::string out_path = !flags.out.empty() ? flags.out : spec.output;
  if (out_path.empty()) throw ScenarioError("sweep: no output path (set \"output\" or pass --out)");
  const std::string csv = run_sweep(spec, out_path, flags.seed);
  const std::size_t rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
  std::cout << "wrote " << rows << " rows to " << out_path << "\n";
  return 0;
}

int cmd_check(const std::string& scenario_path, const std::string& suite, bool corrupt_payments,
              const GlobalFlags& flags) {
  const Scenario scenario = load_and_print(scenario_path, flags);
  SuiteOptions options;
  if (corrupt_payments) options.payment_rule = PaymentRule::DropBoundaryTerm;
  if (flags.tol) options.ic_tolerance = *flags.tol;
  const SuiteReport report = run_property_suite(scenario, suite_kind_from_string(suite), options);
  for (const auto& line : report.lines) std::cout << line << "\n";
  if (!report.passed) {
    std::cout << "suite FAILED: " << *report.first_failure << "\n";
    return 2;
  }
  std::cout << "suite passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-market equilibrium and mechanism solver"};
  app.set_version_flag("--version", datamkt::kVersion);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  double tol_value = 0.0;
  std::int64_t samples_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the scenario seed");
  app.add_option("--out", flags.out, "output file path");
  auto* tol_opt = app.add_option("--tol", tol_value, "override tolerance (tie/IC)");
  auto* samples_opt = app.add_option("--samples", samples_value, "override Monte Carlo sample count");

  std::string scenario_path;
  std::string spec_path;
  std::string scheme = "vcg";
  std::string report_csv;
  std::string suite = "structure";
  std::string rho_grid_csv;
  std::string vh_grid_csv;
  double example_v = 1.0;
  int example_id = 1;
  bool corrupt_payments = false;

  auto* solve = app.add_subcommand("solve", "known-values platform-optimal prices and profile");
  solve->add_option("--scenario", scenario_path, "scenario JSON file")->required();

  auto* first_best_cmd = app.add_subcommand("first-best", "surplus-maximizing profile");
  first_best_cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();

  auto* mechanism_cmd = app.add_subcommand("mechanism", "truth-eliciting mechanisms");
  mechanism_cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  mechanism_cmd->add_option("--scheme", scheme, "vcg (known reports) or bayesian (distribution-based)")
      ->check(CLI::IsMember({"vcg", "bayesian"}));
  mechanism_cmd->add_option("--report", report_csv, "comma-separated reported values");

  auto* example_cmd = app.add_subcommand("example", "run a canned example (1, 2 or 3)");
  example_cmd->add_option("id", example_id, "which example")->required()->check(CLI::Range(1, 3));
  example_cmd->add_option("--rho-grid", rho_grid_csv, "comma-separated correlation grid");
  example_cmd->add_option("--vh-grid", vh_grid_csv, "comma-separated high-side value grid");
  example_cmd->add_option("--v", example_v, "common privacy value (example 1)");

  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep to CSV");
  sweep_cmd->add_option("--spec", spec_path, "sweep spec JSON file")->required();

  auto* check_cmd = app.add_subcommand("check", "run a property suite");
  check_cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  check_cmd->add_option("--suite", suite, "structure, equilibrium or mechanism")->required();
  check_cmd->add_flag("--corrupt-payments", corrupt_payments,
                      "negative control: drop the payment boundary term");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*seed_opt) flags.seed = seed_value;
  if (*tol_opt) flags.tol = tol_value;
  if (*samples_opt) flags.samples = samples_value;

  try {
    if (solve->parsed()) return cmd_solve(scenario_path, flags);
    if (first_best_cmd->parsed()) return cmd_first_best(scenario_path, flags);
    if (mechanism_cmd->parsed()) return cmd_mechanism(scenario_path, scheme, report_csv, flags);
    if (example_cmd->parsed()) return cmd_example(example_id, rho_grid_csv, vh_grid_csv, example_v, flags);
    if (sweep_cmd->parsed()) return cmd_sweep(spec_path, flags);
    if (check_cmd->parsed()) return cmd_check(scenario_path, suite, corrupt_payments, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
