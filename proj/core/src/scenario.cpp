#include "datamkt/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <fstream>
#include <numeric>
#include <sstream>

namespace datamkt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ScenarioError(path + ": " + message);
}

const json& require(const json& node, const char* key, const std::string& path) {
  if (!node.is_object() || !node.contains(key)) fail(path + "." + key, "missing required field");
  return node.at(key);
}

double as_number(const json& node, const std::string& path) {
  if (!node.is_number()) fail(path, "expected a number");
  return node.get<double>();
}

std::string as_string(const json& node, const std::string& path) {
  if (!node.is_string()) fail(path, "expected a string");
  return node.get<std::string>();
}

std::vector<double> as_number_array(const json& node, const std::string& path) {
  if (!node.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(node.size());
  for (std::size_t k = 0; k < node.size(); ++k) {
    out.push_back(as_number(node[k], path + "[" + std::to_string(k) + "]"));
  }
  return out;
}

// Scalar or one-entry-per-block array.
std::vector<double> per_block(const json& node, std::size_t blocks, const std::string& path) {
  if (node.is_number()) return std::vector<double>(blocks, node.get<double>());
  const std::vector<double> xs = as_number_array(node, path);
  if (xs.size() != blocks) fail(path, "expected one entry per block");
  return xs;
}

}  // namespace

Eigen::MatrixXd BlockCovarianceSpec::expand() const {
  const int n = total_users();
  Eigen::MatrixXd sigma(n, n);
  std::vector<int> block_of(static_cast<std::size_t>(n));
  int at = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    for (int k = 0; k < sizes[b]; ++k) block_of[static_cast<std::size_t>(at++)] = static_cast<int>(b);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto bi = static_cast<std::size_t>(block_of[static_cast<std::size_t>(i)]);
      const auto bj = static_cast<std::size_t>(block_of[static_cast<std::size_t>(j)]);
      if (i == j) {
        sigma(i, j) = variance[bi];
      } else if (bi == bj) {
        sigma(i, j) = within[bi] * variance[bi];
      } else {
        sigma(i, j) = cross * std::sqrt(variance[bi] * variance[bj]);
      }
    }
  }
  return sigma;
}

int BlockCovarianceSpec::total_users() const {
  return std::accumulate(sizes.begin(), sizes.end(), 0);
}

KnownValueInstance Scenario::known_instance() const {
  if (mode != ScenarioMode::Known) {
    throw ScenarioError("scenario '" + name + "' is not in known-values mode");
  }
  return {market, values};
}

BayesianInstance Scenario::bayesian_instance() const {
  if (mode != ScenarioMode::Bayesian) {
    throw ScenarioError("scenario '" + name + "' is not in bayesian mode");
  }
  return {market, distributions};
}

ValueDistribution distribution_from_json(const json& node, const std::string& path) {
  const std::string kind = as_string(require(node, "kind", path), path + ".kind");
  try {
    if (kind == "uniform") {
      return ValueDistribution::uniform(as_number(require(node, "low", path), path + ".low"),
                                        as_number(require(node, "high", path), path + ".high"));
    }
    if (kind == "exponential") {
      return ValueDistribution::truncated_exponential(
          as_number(require(node, "rate", path), path + ".rate"),
          as_number(require(node, "vmax", path), path + ".vmax"));
    }
    if (kind == "piecewise") {
      const json& knots = require(node, "knots", path);
      if (!knots.is_array()) fail(path + ".knots", "expected an array of [v, F] pairs");
      std::vector<std::pair<double, double>> parsed;
      for (std::size_t k = 0; k < knots.size(); ++k) {
        const std::string kp = path + ".knots[" + std::to_string(k) + "]";
        if (!knots[k].is_array() || knots[k].size() != 2) fail(kp, "expected a [v, F] pair");
        parsed.emplace_back(as_number(knots[k][0], kp + "[0]"), as_number(knots[k][1], kp + "[1]"));
      }
      return ValueDistribution::piecewise_linear_cdf(std::move(parsed));
    }
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  fail(path + ".kind", "unknown distribution kind '" + kind + "'");
}

Scenario scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario: expected a JSON object");

  const std::string name = as_string(require(doc, "name", "scenario"), "scenario.name");
  const std::string mode_str = as_string(require(doc, "mode", "scenario"), "scenario.mode");
  ScenarioMode mode;
  if (mode_str == "known") {
    mode = ScenarioMode::Known;
  } else if (mode_str == "bayesian") {
    mode = ScenarioMode::Bayesian;
  } else {
    fail("scenario.mode", "expected \"known\" or \"bayesian\"");
  }

  const json& cov = require(doc, "covariance", "scenario");
  std::optional<BlockCovarianceSpec> blocks;
  Eigen::MatrixXd sigma;
  if (cov.contains("matrix") == cov.contains("blocks")) {
    fail("scenario.covariance", "provide exactly one of \"matrix\" or \"blocks\"");
  }
  if (cov.contains("matrix")) {
    const json& m = cov.at("matrix");
    if (!m.is_array() || m.empty()) fail("scenario.covariance.matrix", "expected a non-empty matrix");
    const std::size_t n = m.size();
    sigma.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      const std::string rp = "scenario.covariance.matrix[" + std::to_string(r) + "]";
      const std::vector<double> row = as_number_array(m[r], rp);
      if (row.size() != n) fail(rp, "matrix must be square");
      for (std::size_t c = 0; c < n; ++c) sigma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  } else {
    const json& bl = cov.at("blocks");
    BlockCovarianceSpec spec;
    const json& sizes = require(bl, "sizes", "scenario.covariance.blocks");
    if (!sizes.is_array() || sizes.empty()) {
      fail("scenario.covariance.blocks.sizes", "expected a non-empty array");
    }
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      const std::string sp = "scenario.covariance.blocks.sizes[" + std::to_string(k) + "]";
      if (!sizes[k].is_number_integer() || sizes[k].get<int>() < 1) fail(sp, "expected a positive integer");
      spec.sizes.push_back(sizes[k].get<int>());
    }
    spec.variance = per_block(require(bl, "variance", "scenario.covariance.blocks"),
                              spec.sizes.size(), "scenario.covariance.blocks.variance");
    spec.within = per_block(require(bl, "within", "scenario.covariance.blocks"), spec.sizes.size(),
                            "scenario.covariance.blocks.within");
    spec.cross = as_number(require(bl, "cross", "scenario.covariance.blocks"),
                           "scenario.covariance.blocks.cross");
    sigma = spec.expand();
    blocks = std::move(spec);
  }

  std::optional<GaussianMarket> market;
  try {
    market.emplace(std::move(sigma));
  } catch (const std::invalid_argument& e) {
    fail("scenario.covariance", e.what());
  }
  const int n = market->size();

  Eigen::VectorXd values;
  std::vector<ValueDistribution> dists;
  if (mode == ScenarioMode::Known) {
    if (doc.contains("distributions")) {
      fail("scenario.distributions", "not allowed in known mode");
    }
    const json& v = require(doc, "values", "scenario");
    std::vector<double> per_user;
    if (v.is_object() && v.contains("blocks")) {
      if (!blocks) fail("scenario.values.blocks", "requires covariance given as blocks");
      const std::vector<double> vb =
          per_block(v.at("blocks"), blocks->sizes.size(), "scenario.values.blocks");
      for (std::size_t b = 0; b < vb.size(); ++b) {
        per_user.insert(per_user.end(), static_cast<std::size_t>(blocks->sizes[b]), vb[b]);
      }
    } else {
      per_user = as_number_array(v, "scenario.values");
    }
    if (static_cast<int>(per_user.size()) != n) {
      fail("scenario.values", "expected " + std::to_string(n) + " entries, got " +
                                  std::to_string(per_user.size()));
    }
    values = Eigen::Map<const Eigen::VectorXd>(per_user.data(),
                                               static_cast<Eigen::Index>(per_user.size()));
    for (int i = 0; i < n; ++i) {
      if (!(values(i) >= 0.0)) fail("scenario.values[" + std::to_string(i) + "]", "must be >= 0");
    }
  } else {
    if (doc.contains("values")) fail("scenario.values", "not allowed in bayesian mode");
    const json& d = require(doc, "distributions", "scenario");
    if (d.is_object() && d.contains("blocks")) {
      if (!blocks) fail("scenario.distributions.blocks", "requires covariance given as blocks");
      const json& db = d.at("blocks");
      if (!db.is_array() || db.size() != blocks->sizes.size()) {
        fail("scenario.distributions.blocks", "expected one distribution per block");
      }
      for (std::size_t b = 0; b < db.size(); ++b) {
        const ValueDistribution dist = distribution_from_json(
            db[b], "scenario.distributions.blocks[" + std::to_string(b) + "]");
        for (int k = 0; k < blocks->sizes[b]; ++k) dists.push_back(dist);
      }
    } else {
      if (!d.is_array()) fail("scenario.distributions", "expected an array of distributions");
      for (std::size_t k = 0; k < d.size(); ++k) {
        dists.push_back(
            distribution_from_json(d[k], "scenario.distributions[" + std::to_string(k) + "]"));
      }
    }
    if (static_cast<int>(dists.size()) != n) {
      fail("scenario.distributions", "expected " + std::to_string(n) + " entries, got " +
                                         std::to_string(dists.size()));
    }
  }

  SolverSpec solver;
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    if (!s.is_object()) fail("scenario.solver", "expected an object");
    if (s.contains("symmetry")) {
      const std::string sym = as_string(s.at("symmetry"), "scenario.solver.symmetry");
      if (sym == "auto") {
        solver.symmetry = SymmetryMode::Auto;
      } else if (sym == "on") {
        solver.symmetry = SymmetryMode::On;
      } else if (sym == "off") {
        solver.symmetry = SymmetryMode::Off;
      } else {
        fail("scenario.solver.symmetry", "expected \"auto\", \"on\" or \"off\"");
      }
    }
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_unsigned()) fail("scenario.solver.seed", "expected a non-negative integer");
      solver.seed = s.at("seed").get<std::uint64_t>();
    }
    if (s.contains("samples")) {
      if (!s.at("samples").is_number_integer() || s.at("samples").get<std::int64_t>() < 1) {
        fail("scenario.solver.samples", "expected a positive integer");
      }
      solver.mc_samples = s.at("samples").get<std::int64_t>();
    }
    if (s.contains("tie_tolerance")) {
      solver.tie_tolerance = as_number(s.at("tie_tolerance"), "scenario.solver.tie_tolerance");
      if (!(solver.tie_tolerance >= 0.0)) fail("scenario.solver.tie_tolerance", "must be >= 0");
    }
  }

  Scenario out{name, std::move(*market), mode, std::move(values), std::move(dists), solver,
               std::move(blocks)};
  return out;
}

Scenario load_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: invalid JSON: ") + e.what());
  }
  return scenario_from_json(doc);
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

nlohmann::ordered_json Scenario::resolved_json() const {
  nlohmann::ordered_json out;
  out["name"] = name;
  out["mode"] = mode == ScenarioMode::Known ? "known" : "bayesian";
  out["users"] = market.size();
  nlohmann::ordered_json matrix = nlohmann::ordered_json::array();
  for (int r = 0; r < market.size(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int c = 0; c < market.size(); ++c) row.push_back(market.covariance(r, c));
    matrix.push_back(std::move(row));
  }
  out["covariance"] = std::move(matrix);
  if (mode == ScenarioMode::Known) {
    out["values"] = std::vector<double>(values.data(), values.data() + values.size());
  } else {
    nlohmann::ordered_json ds = nlohmann::ordered_json::array();
    for (const auto& d : distributions) ds.push_back(d.describe());
    out["distributions"] = std::move(ds);
  }
  out["solver"] = {
      {"symmetry", solver.symmetry == SymmetryMode::Auto
                       ? "auto"
                       : (solver.symmetry == SymmetryMode::On ? "on" : "off")},
      {"seed", solver.seed},
      {"samples", solver.mc_samples},
      {"tie_tolerance", solver.tie_tolerance},
  };
  return out;
}

}  // namespace datamkt
