#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "perishable/demand.hpp"
#include "perishable/errors.hpp"

using namespace perishable;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& body) {
  const auto path = fs::temp_directory_path() / ("perishable_demand_" + name);
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(Lifecycle, ShapeAndLength) {
  LifecycleConfig c;
  const auto d = lifecycle_forecast(c);
  ASSERT_EQ(d.size(), 240u);
  for (double x : d) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, c.peak + 1e-12);
  }
  // ramp up, plateau at peak, ramp down
  EXPECT_LT(d.front(), 0.05 * c.peak);
  EXPECT_LT(d.back(), 0.05 * c.peak);
  EXPECT_EQ(d[100], c.peak);
  for (int i = 1; i < 60; ++i) EXPECT_GE(d[i], d[i - 1]);
  for (int i = 145; i < 240; ++i) EXPECT_LE(d[i], d[i - 1]);
  EXPECT_EQ(lifecycle_forecast(c), d);
}

TEST(Lifecycle, RejectsBadFractions) {
  LifecycleConfig c;
  c.growth = 0.9;
  EXPECT_THROW(lifecycle_forecast(c), std::invalid_argument);
}

TEST(Noise, SigmaSeries) {
  const std::vector<double> d{10, 20, 40};
  NoiseModel worst{NoiseKind::worst_case, 0.25};
  NoiseModel balanced{NoiseKind::balanced, 0.15};
  EXPECT_EQ(sigma_series(d, worst), (std::vector<double>(3, 10.0)));
  const auto b = sigma_series(d, balanced);
  EXPECT_DOUBLE_EQ(b[0], 1.5);
  EXPECT_DOUBLE_EQ(b[2], 6.0);
  NoiseModel custom{NoiseKind::custom, 0, {1, 2, 3}};
  EXPECT_EQ(sigma_series(d, custom), (std::vector<double>{1, 2, 3}));
  custom.custom_sigma = {1};
  EXPECT_THROW(sigma_series(d, custom), std::invalid_argument);
}

TEST(Noise, KindNames) {
  for (auto k : {NoiseKind::worst_case, NoiseKind::balanced, NoiseKind::custom})
    EXPECT_EQ(noise_kind_from_string(to_string(k)), k);
  EXPECT_THROW(noise_kind_from_string("gaussian"), InputError);
}

TEST(Scenario, Accessors) {
  DemandScenario s({10, 20, 30}, {NoiseKind::balanced, 0.1});
  EXPECT_EQ(s.forecast_at(0), 0);
  EXPECT_EQ(s.forecast_at(2), 20);
  EXPECT_EQ(s.forecast_at(4), 0);
  EXPECT_EQ(s.forecast_sum(2, 5), 50);
  EXPECT_EQ(s.peak(), 30);
  EXPECT_DOUBLE_EQ(s.sigma_at(3), 3.0);
  EXPECT_EQ(s.sigma_at(9), 0.0);
  EXPECT_EQ(s.realize(1, -50), 0.0);  // truncated
  EXPECT_DOUBLE_EQ(s.realize(1, 1.0), 11.0);
}

TEST(Scenario, IntegerDemandRounds) {
  NoiseModel n{NoiseKind::worst_case, 0.1};
  n.integer_demand = true;
  DemandScenario s({10, 10}, n);
  EXPECT_EQ(s.realize(1, 0.26), 10.0);
  EXPECT_EQ(s.realize(1, 0.6), 11.0);
}

TEST(Scenario, SamplePathDeterministicAndMeanRight) {
  std::vector<double> d(200, 50.0);
  DemandScenario s(d, {NoiseKind::worst_case, 0.1});
  const auto a = sample_demand_path(s, 42);
  EXPECT_EQ(a, sample_demand_path(s, 42));
  EXPECT_NE(a, sample_demand_path(s, 43));
  double mean = 0;
  for (double x : a) mean += x / a.size();
  EXPECT_NEAR(mean, 50.0, 4 * 5.0 / std::sqrt(200.0));
}

TEST(ForecastFile, RoundTrip) {
  const std::vector<double> d{1.5, 0, 3.25, 1e-7};
  const auto path = fs::temp_directory_path() / "perishable_demand_rt.csv";
  save_forecast(path, d);
  EXPECT_EQ(load_forecast(path), d);
}

TEST(ForecastFile, Errors) {
  try {
    load_forecast("/nonexistent/forecast.csv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/forecast.csv"), std::string::npos);
  }
  const auto neg = temp_file("neg.csv", "t,d\n1,5\n2,-1\n");
  try {
    load_forecast(neg);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":3: period 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_forecast(temp_file("gap.csv", "1,5\n3,5\n")), InputError);
  EXPECT_THROW(load_forecast(temp_file("junk.csv", "1,5x\n")), InputError);
  EXPECT_THROW(load_forecast(temp_file("empty.csv", "t,d\n")), InputError);
  EXPECT_EQ(load_forecast(temp_file("nohdr.csv", "1,5\n2,6\n")), (std::vector<double>{5, 6}));
}
