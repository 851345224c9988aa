#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perishable/config.hpp"

namespace perishable {

/// One point of the sweep. Axes the grid leaves empty take the base value.
struct Cell {
  int index = 0;
  int lead_time = 0;
  int lifetime = 0;
  double expiration = 0.0;  // ŵ
  double lost_sales = 0.0;  // b̂
  double yield_max = 0.0;
  NoiseKind noise = NoiseKind::worst_case;

  std::string label() const;
};

std::vector<Cell> expand_grid(const RunConfig& config);
RunConfig cell_config(const RunConfig& base, const Cell& cell);

struct CurvePoint {
  int value = 0;
  double mean = 0.0;
  double se = 0.0;
  double lb = 0.0;
  double ub = 0.0;
};

struct PolicyOutcome {
  std::string name;
  std::string kind;
  std::optional<double> param;
  EvalResult result;
  std::vector<CurvePoint> curve;  // optimized policies only
};

struct CellBounds {
  bool conforming = false;
  double out_lb_opt = 0.0;
  double out_ub_opt = 0.0;
  double pil_lb_opt = 0.0;
  double pil_ub_opt = 0.0;
  SearchInterval out_interval;
  SearchInterval pil_interval;
};

CellBounds cell_bounds(const Problem& problem, int margin);

struct CellResult {
  Cell cell;
  CellBounds bounds;
  std::vector<PolicyOutcome> policies;
};

/// Optimizes the tunable policies over their bounds intervals and evaluates
/// all of them under common episode seeds.
CellResult run_cell(const RunConfig& base, const Cell& cell);

nlohmann::json to_json(const CellResult& result);
CellResult cell_result_from_json(const nlohmann::json& j);

struct ExperimentOptions {
  std::filesystem::path out_dir;
  bool resume = true;
  std::ostream* progress = nullptr;
};

struct ExperimentSummary {
  int cells = 0;
  int reused = 0;
  int failed = 0;
};

/// Runs every cell, keeping one result file per finished cell under
/// out_dir/cells so an interrupted run picks up where it stopped. Failed
/// cells are listed in failures.csv and the run continues. Writes
/// results.csv, episodes.csv, curves.csv, bounds.csv and the rendered report.
ExperimentSummary run_experiment(const RunConfig& config, const ExperimentOptions& options);

void write_results(const std::vector<CellResult>& cells, const std::filesystem::path& dir);

/// Reads results.csv from `dir` and writes report.txt, gaps.csv and
/// bars.csv. `reference` defaults to the experiment's configured reference,
/// then to the first policy. Throws InputError when results are missing.
void render_report(const std::filesystem::path& dir, const std::string& reference = {});

std::string csv_number(double x);

}  // namespace perishable
