#include "perishable/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "perishable/errors.hpp"
#include "perishable/rng.hpp"

namespace perishable {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::worst_case: return "worst_case";
    case NoiseKind::balanced: return "balanced";
    case NoiseKind::custom: return "custom";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "worst_case") return NoiseKind::worst_case;
  if (name == "balanced") return NoiseKind::balanced;
  if (name == "custom") return NoiseKind::custom;
  throw InputError("unknown noise kind '" + name + "'");
}

void LifecycleConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("lifecycle horizon must be >= 1");
  if (!(peak > 0.0)) throw std::invalid_argument("lifecycle peak must be positive");
  if (growth < 0.0 || maturity < 0.0 || decline < 0.0)
    throw std::invalid_argument("lifecycle phase fractions must be >= 0");
  if (std::abs(growth + maturity + decline - 1.0) > 1e-9)
    throw std::invalid_argument("lifecycle phase fractions must sum to 1");
  if (!(growth_shape > 0.0)) throw std::invalid_argument("lifecycle growth_shape must be positive");
}

std::vector<double> sigma_series(std::span<const double> forecast, const NoiseModel& noise) {
  if (noise.level < 0.0) throw std::invalid_argument("noise level must be >= 0");
  std::vector<double> sigma(forecast.size(), 0.0);
  switch (noise.kind) {
    case NoiseKind::worst_case: {
      const double peak = forecast.empty() ? 0.0 : *std::max_element(forecast.begin(), forecast.end());
      std::fill(sigma.begin(), sigma.end(), noise.level * peak);
      break;
    }
    case NoiseKind::balanced:
      std::transform(forecast.begin(), forecast.end(), sigma.begin(),
                     [&](double d) { return noise.level * d; });
      break;
    case NoiseKind::custom:
      if (noise.custom_sigma.size() != forecast.size())
        throw std::invalid_argument("custom sigma series must match the forecast length");
      sigma = noise.custom_sigma;
      break;
  }
  for (double s : sigma) {
    if (!(s >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  }
  return sigma;
}

DemandScenario::DemandScenario(std::vector<double> forecast, NoiseModel noise)
    : forecast_(std::move(forecast)), noise_(std::move(noise)) {
  if (forecast_.empty()) throw std::invalid_argument("forecast must not be empty");
  for (double d : forecast_) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("forecast values must be finite and >= 0");
  }
  sigma_ = sigma_series(forecast_, noise_);
}

double DemandScenario::forecast_at(int t) const {
  if (t < 1 || t > horizon()) return 0.0;
  return forecast_[static_cast<std::size_t>(t - 1)];
}

double DemandScenario::sigma_at(int t) const {
  if (t < 1 || t > horizon()) return 0.0;
  return sigma_[static_cast<std::size_t>(t - 1)];
}

double DemandScenario::forecast_sum(int from, int to) const {
  double sum = 0.0;
  for (int j = std::max(from, 1); j <= std::min(to, horizon()); ++j) sum += forecast_at(j);
  return sum;
}

double DemandScenario::peak() const { return *std::max_element(forecast_.begin(), forecast_.end()); }

double DemandScenario::realize(int t, double standard_normal) const {
  double d = forecast_at(t) + sigma_at(t) * standard_normal;
  if (noise_.truncate_at_zero) d = std::max(d, 0.0);
  if (noise_.integer_demand) d = std::max(std::round(d), 0.0);
  return d;
}

std::vector<double> lifecycle_forecast(const LifecycleConfig& config) {
  config.validate();
  const int T = config.horizon;
  const int growth = static_cast<int>(std::lround(config.growth * T));
  const int plateau = std::min(static_cast<int>(std::lround(config.maturity * T)), T - growth);
  const int decline = T - growth - plateau;
  const double k = config.growth_shape;
  auto logistic = [k](double x) { return 1.0 / (1.0 + std::exp(-k * (x - 0.5))); };

  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(T));
  for (int i = 0; i < growth; ++i) d.push_back(config.peak * logistic(static_cast<double>(i) / growth));
  for (int i = 0; i < plateau; ++i) d.push_back(config.peak);
  for (int i = 1; i <= decline; ++i)
    d.push_back(config.peak * logistic(1.0 - static_cast<double>(i) / decline));
  return d;
}

std::vector<double> load_forecast(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open forecast file " + path.string());
  std::vector<double> series;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line == "t,d") continue;
    }
    const auto comma = line.find(',');
    auto fail = [&](const std::string& what) {
      return InputError(fmt::format("{}:{}: {}", path.string(), line_no, what));
    };
    if (comma == std::string::npos) throw fail("expected 't,d'");
    long period = 0;
    double value = 0.0;
    try {
      std::size_t used = 0;
      period = std::stol(line.substr(0, comma), &used);
      if (used != comma) throw fail("malformed period");
      const std::string rest = line.substr(comma + 1);
      value = std::stod(rest, &used);
      if (used != rest.size()) throw fail("malformed demand value");
    } catch (const std::logic_error&) {
      throw fail("malformed row '" + line + "'");
    }
    if (period != static_cast<long>(series.size()) + 1)
      throw fail(fmt::format("expected period {}, found {}", series.size() + 1, period));
    if (!(value >= 0.0) || !std::isfinite(value)) throw fail(fmt::format("period {}: demand must be finite and >= 0", period));
    series.push_back(value);
  }
  if (series.empty()) throw InputError(path.string() + ": no forecast rows");
  return series;
}

void save_forecast(const std::filesystem::path& path, std::span<const double> forecast) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t,d\n";
  for (std::size_t i = 0; i < forecast.size(); ++i) out << fmt::format("{},{}\n", i + 1, forecast[i]);
}

std::vector<double> sample_demand_path(const DemandScenario& scenario, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> path(static_cast<std::size_t>(scenario.horizon()));
  for (int t = 1; t <= scenario.horizon(); ++t) {
    path[static_cast<std::size_t>(t - 1)] = scenario.realize(t, normal(rng));
  }
  return path;
}

}  // namespace perishable
