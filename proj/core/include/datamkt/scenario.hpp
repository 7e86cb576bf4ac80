#pragma once

#include "datamkt/distribution.hpp"
#include "datamkt/game.hpp"
#include "datamkt/mechanism.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace datamkt {

// Scenario files are JSON documents with the schema documented in the README
// (field names, nesting and units are normative; see there for the full
// field-by-field reference). Violations throw ScenarioError carrying the
// offending field path.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioMode { Known, Bayesian };

// Covariance given as interchangeable blocks: per-block size, variance and
// within-block correlation, plus one cross-block correlation shared by all
// block pairs. Expands to sigma_ij = within_b * var_b inside block b and
// cross * sqrt(var_a var_b) across blocks.
struct BlockCovarianceSpec {
  std::vector<int> sizes;
  std::vector<double> variance;
  std::vector<double> within;
  double cross = 0.0;

  Eigen::MatrixXd expand() const;
  int total_users() const;
};

struct SolverSpec {
  SymmetryMode symmetry = SymmetryMode::Auto;
  std::uint64_t seed = 2024;
  std::int64_t mc_samples = 10000;
  double tie_tolerance = 1e-9;
};

struct Scenario {
  std::string name;
  GaussianMarket market;
  ScenarioMode mode = ScenarioMode::Known;
  Eigen::VectorXd values;                         // known mode
  std::vector<ValueDistribution> distributions;   // bayesian mode
  SolverSpec solver;
  std::optional<BlockCovarianceSpec> blocks;

  KnownValueInstance known_instance() const;
  BayesianInstance bayesian_instance() const;
  SolveOptions solve_options() const {
    return {solver.symmetry, solver.tie_tolerance};
  }

  // Post-expansion view (explicit matrix, per-user values) so every run can
  // print exactly what was solved.
  nlohmann::ordered_json resolved_json() const;
};

Scenario scenario_from_json(const nlohmann::json& doc);
Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

ValueDistribution distribution_from_json(const nlohmann::json& node, const std::string& path);

}  // namespace datamkt
