#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace perishable {

enum class NoiseKind { worst_case, balanced, custom };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

/// Zero-mean normal forecast error with a per-period standard deviation.
/// worst_case: sigma_t = level * max d; balanced: sigma_t = level * d_t;
/// custom: sigma_t given explicitly.
struct NoiseModel {
  NoiseKind kind = NoiseKind::worst_case;
  double level = 0.15;
  std::vector<double> custom_sigma;
  bool truncate_at_zero = true;
  bool integer_demand = false;
};

/// Logistic growth to a plateau followed by a mirrored decline.
struct LifecycleConfig {
  int horizon = 240;
  double peak = 100.0;
  double growth = 0.25;
  double maturity = 0.35;
  double decline = 0.40;
  double growth_shape = 10.0;  // logistic steepness across a phase

  void validate() const;
};

class DemandScenario {
 public:
  DemandScenario(std::vector<double> forecast, NoiseModel noise);

  int horizon() const { return static_cast<int>(forecast_.size()); }
  const std::vector<double>& forecast() const { return forecast_; }
  const std::vector<double>& sigma() const { return sigma_; }
  const NoiseModel& noise() const { return noise_; }

  /// d_t for 1-based t; zero outside 1..T.
  double forecast_at(int t) const;
  double sigma_at(int t) const;
  /// Sum of d_j for j = from..to (1-based, inclusive), zero-padded.
  double forecast_sum(int from, int to) const;
  double peak() const;

  /// One demand draw for period t given a standard normal variate.
  double realize(int t, double standard_normal) const;

 private:
  std::vector<double> forecast_;
  NoiseModel noise_;
  std::vector<double> sigma_;
};

std::vector<double> sigma_series(std::span<const double> forecast, const NoiseModel& noise);

std::vector<double> lifecycle_forecast(const LifecycleConfig& config);

/// Reads the `t,d` forecast format. Periods must run 1, 2, ... without gaps.
/// Throws InputError naming the file and line.
std::vector<double> load_forecast(const std::filesystem::path& path);
void save_forecast(const std::filesystem::path& path, std::span<const double> forecast);

/// D_t = max(0, d_t + sigma_t * N(0,1)), i.i.d. across t.
std::vector<double> sample_demand_path(const DemandScenario& scenario, std::uint64_t seed);

}  // namespace perishable
