#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perishable/demand.hpp"
#include "perishable/env.hpp"
#include "perishable/evaluator.hpp"
#include "perishable/policies.hpp"

namespace perishable {

struct DemandConfig {
  // exactly one source: a `t,d` file, an inline series, a lifecycle curve or
  // a constant level
  std::string forecast_file;
  std::vector<double> forecast;
  std::optional<LifecycleConfig> lifecycle;
  std::optional<double> constant;
  NoiseModel noise;
};

struct PolicyConfig {
  std::string name;  // report label, defaults to the kind
  PolicySpec spec;
  bool optimize = false;     // search the parameter over the bounds interval
  std::string actions_file;  // replay: trace to load
};

/// Sweeps; an empty axis keeps the base value.
struct GridConfig {
  std::vector<int> lead_time;
  std::vector<int> lifetime;
  std::vector<double> expiration;  // ŵ
  std::vector<double> lost_sales;  // b̂
  std::vector<double> yield_max;
  std::vector<NoiseKind> noise;
};

struct RunConfig {
  EnvParams env;
  RawCosts costs;
  DemandConfig demand;
  std::vector<PolicyConfig> policies;
  EvalConfig eval;
  int margin = 2;
  std::string reference;  // policy name the gaps are measured against
  GridConfig grid;
  bool normalize_observations = false;
  std::filesystem::path base_dir;  // relative file paths resolve here
};

/// Throws InputError with the offending field path, e.g. "env.lead_time: ...".
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

std::vector<double> build_forecast(const RunConfig& config);
/// Forecast, rates and env of the base config. Throws InputError.
Problem build_problem(const RunConfig& config);
std::vector<int> load_actions(const std::filesystem::path& path);

}  // namespace perishable
