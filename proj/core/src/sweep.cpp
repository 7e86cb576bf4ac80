#include "datamkt/sweep.hpp"

#include "datamkt/csv.hpp"
#include "datamkt/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

namespace datamkt {

namespace {

using nlohmann::json;

SweepAxis parse_axis(const json& node, const std::string& path) {
  if (!node.is_object()) throw ScenarioError(path + ": expected an object");
  SweepAxis axis;
  for (const char* key : {"path", "min", "max", "step"}) {
    if (!node.contains(key)) {
      throw ScenarioError(path + "." + key + ": missing required field");
    }
  }
  if (!node.at("path").is_string()) throw ScenarioError(path + ".path: expected a string");
  axis.path = node.at("path").get<std::string>();
  for (const auto& [key, slot] :
       std::initializer_list<std::pair<const char*, double*>>{
           {"min", &axis.min}, {"max", &axis.max}, {"step", &axis.step}}) {
    if (!node.at(key).is_number()) throw ScenarioError(path + "." + key + ": expected a number");
    *slot = node.at(key).get<double>();
  }
  if (!(axis.step > 0.0)) throw ScenarioError(path + ".step: must be > 0");
  if (axis.max < axis.min) throw ScenarioError(path + ".max: must be >= min");
  return axis;
}

json::json_pointer to_pointer(const std::string& dotted) {
  std::string p;
  for (char c : dotted) p += (c == '.') ? '/' : c;
  return json::json_pointer("/" + p);
}

void patch(json& doc, const SweepAxis& axis, double value) {
  const json::json_pointer ptr = to_pointer(axis.path);
  if (!doc.contains(ptr) || !doc.at(ptr).is_number()) {
    throw ScenarioError("sweep: unresolvable parameter path '" + axis.path +
                        "' (must name an existing numeric scenario field)");
  }
  doc[ptr] = value;
}

}  // namespace

std::vector<double> axis_values(const SweepAxis& axis) {
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double v = axis.min + axis.step * k;
    if (v > axis.max + axis.step * 1e-9) break;
    out.push_back(v);
  }
  return out;
}

SweepSpec load_sweep_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("sweep: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("sweep: expected a JSON object");
  SweepSpec spec;
  if (!doc.contains("scenario")) throw ScenarioError("sweep.scenario: missing required field");
  spec.scenario = doc.at("scenario");
  scenario_from_json(spec.scenario);  // validate the template up front
  if (!doc.contains("axis1")) throw ScenarioError("sweep.axis1: missing required field");
  spec.axis1 = parse_axis(doc.at("axis1"), "sweep.axis1");
  if (doc.contains("axis2")) spec.axis2 = parse_axis(doc.at("axis2"), "sweep.axis2");
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) throw ScenarioError("sweep.output: expected a string");
    spec.output = doc.at("output").get<std::string>();
  }
  return spec;
}

SweepSpec load_sweep_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open sweep spec file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_sweep_spec(buf.str());
}

std::vector<std::string> outcome_csv_header() {
  return {"n",
          "profile",
          "prices",
          "user_payoffs",
          "platform_payoff",
          "social_surplus",
          "first_best_profile",
          "first_best_surplus",
          "efficiency"};
}

std::vector<std::string> outcome_csv_fields(const Scenario& scenario) {
  const KnownValueInstance instance = scenario.known_instance();
  const SolveOptions options = scenario.solve_options();
  const StackelbergResult eq = stackelberg_equilibrium(instance, options);
  const FirstBestResult fb = first_best(instance, options);
  const EfficiencyReport eff =
      classify_efficiency(instance, eq.outcome.profile, std::nullopt, options);

  const auto& prices = eq.outcome.prices.vec();
  const auto& payoffs = eq.outcome.user_payoffs;
  return {std::to_string(instance.size()),
          eq.outcome.profile.to_string(),
          join_semicolon({prices.data(), prices.data() + prices.size()}),
          join_semicolon({payoffs.data(), payoffs.data() + payoffs.size()}),
          format_double(eq.outcome.platform_payoff),
          format_double(eq.outcome.social_surplus),
          fb.profile.to_string(),
          format_double(fb.surplus),
          to_string(eff.verdict)};
}

std::string run_sweep(const SweepSpec& spec, const std::string& out_path,
                      std::optional<std::uint64_t> seed_override) {
  const std::vector<double> axis1 = axis_values(spec.axis1);
  std::vector<double> axis2{0.0};
  if (spec.axis2) axis2 = axis_values(*spec.axis2);

  struct Point {
    double v1;
    double v2;
  };
  std::vector<Point> grid;
  for (double v1 : axis1) {
    for (double v2 : axis2) grid.push_back({v1, v2});
  }

  std::vector<std::vector<std::string>> rows(grid.size());
  const auto solve_point = [&](std::size_t k) {
    json doc = spec.scenario;
    patch(doc, spec.axis1, grid[k].v1);
    if (spec.axis2) patch(doc, *spec.axis2, grid[k].v2);
    if (seed_override) doc["solver"]["seed"] = *seed_override;
    const Scenario scenario = scenario_from_json(doc);
    std::vector<std::string> fields;
    fields.push_back(format_double(grid[k].v1));
    if (spec.axis2) fields.push_back(format_double(grid[k].v2));
    const std::vector<std::string> outcome = outcome_csv_fields(scenario);
    fields.insert(fields.end(), outcome.begin(), outcome.end());
    rows[k] = std::move(fields);
  };

  // Grid points are independent pure solves; shard them across threads and
  // assemble in grid order.
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t shard =
      (grid.size() + static_cast<std::size_t>(hw) - 1) / static_cast<std::size_t>(hw);
  std::vector<std::future<void>> futures;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t start = 0; start < grid.size(); start += shard) {
    futures.push_back(std::async(std::launch::async, [&, start] {
      const std::size_t end = std::min(grid.size(), start + shard);
      for (std::size_t k = start; k < end; ++k) {
        try {
          solve_point(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    }));
  }
  for (auto& f : futures) f.get();
  if (first_error) std::rethrow_exception(first_error);

  CsvBuilder csv;
  std::vector<std::string> header;
  header.push_back(spec.axis1.path);
  if (spec.axis2) header.push_back(spec.axis2->path);
  const std::vector<std::string> outcome_header = outcome_csv_header();
  header.insert(header.end(), outcome_header.begin(), outcome_header.end());
  csv.row(header);
  for (const auto& row : rows) csv.row(row);

  if (!out_path.empty()) write_file(out_path, csv.str());
  return csv.str();
}

}  // namespace datamkt
