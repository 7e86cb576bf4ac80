#pragma once

#include "datamkt/scenario.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace datamkt {

// One sweep axis: a dot-separated path into the scenario document (array
// indices as bare numbers, e.g. "covariance.blocks.cross" or "values.2"),
// swept from min to max inclusive in increments of step.
struct SweepAxis {
  std::string path;
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;
};

struct SweepSpec {
  nlohmann::json scenario;  // template document, patched per grid point
  SweepAxis axis1;
  std::optional<SweepAxis> axis2;
  std::string output;  // default CSV path; the runner may override
};

SweepSpec load_sweep_spec(const std::string& text);
SweepSpec load_sweep_spec_file(const std::string& path);

std::vector<double> axis_values(const SweepAxis& axis);

// Solves the known-values Stackelberg problem at every grid point and returns
// the CSV (header plus one row per point, axis-major order). Grid points are
// evaluated in parallel; assembly order is fixed by the grid, so output bytes
// depend only on (spec, seed, version). When `out_path` is non-empty the CSV
// is also written there.
std::string run_sweep(const SweepSpec& spec, const std::string& out_path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

// Fixed column schema shared by sweep rows and single-solve CSV output.
std::vector<std::string> outcome_csv_header();
std::vector<std::string> outcome_csv_fields(const Scenario& scenario);

}  // namespace datamkt
