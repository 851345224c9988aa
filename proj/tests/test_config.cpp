#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "perishable/config.hpp"
#include "perishable/errors.hpp"

using namespace perishable;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal() {
  return json::parse(R"({
    "env": {"horizon": 20, "lead_time": 2, "lifetime": 3},
    "demand": {"constant": 5, "noise": {"kind": "worst_case", "level": 0.1}},
    "policies": [{"kind": "out", "optimize": true}, {"kind": "pil", "name": "pil200", "n_paths": 200}]
  })");
}

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_config(minimal());
  EXPECT_EQ(c.env.horizon, 20);
  EXPECT_EQ(c.env.batch_size, 1);
  EXPECT_FALSE(c.env.max_batches);
  EXPECT_EQ(c.costs.lost_sales, 10);
  EXPECT_EQ(c.eval.n_episodes, 2000);
  EXPECT_TRUE(c.eval.crn);
  EXPECT_EQ(c.margin, 2);
  ASSERT_EQ(c.policies.size(), 2u);
  EXPECT_EQ(c.policies[0].name, "out");
  EXPECT_TRUE(c.policies[0].optimize);
  EXPECT_EQ(c.policies[1].name, "pil200");
  EXPECT_EQ(std::get<PilPolicy>(c.policies[1].spec).n_paths, 200);
  const auto problem = build_problem(c);
  EXPECT_EQ(problem.scenario.forecast(), std::vector<double>(20, 5.0));
  EXPECT_DOUBLE_EQ(problem.scenario.sigma_at(3), 0.5);
}

TEST(Config, RoundTrip) {
  auto j = minimal();
  j["env"]["max_batches"] = 6;
  j["env"]["batch_costs"] = {0, 5, 8};
  j["policies"].push_back({{"kind", "bms"}, {"k2", 13}, {"mse_source", "planned"}});
  j["policies"].push_back({{"kind", "replay"}, {"actions", {1, 2, 0}}});
  j["policies"].push_back({{"kind", "random"}, {"max_batches", 3}});
  j["grid"] = {{"lifetime", {2, 3}}, {"noise", {"worst_case", "balanced"}}};
  j["eval"] = {{"episodes", 10}, {"seed", 7}, {"reference", "pil200"}};
  const auto c = parse_config(j);
  const auto again = parse_config(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
  EXPECT_EQ(again.env.max_batches, 6);
  EXPECT_EQ(std::get<BmsPolicy>(again.policies[2].spec).k2, 13);
  EXPECT_EQ(std::get<ReplayPolicy>(again.policies[3].spec).actions, (std::vector<int>{1, 2, 0}));
  EXPECT_EQ(again.grid.noise.size(), 2u);
  EXPECT_EQ(again.eval.master_seed, 7u);
}

TEST(Config, ErrorsNameTheField) {
  auto j = minimal();
  j["env"]["lead_tim"] = 1;
  EXPECT_EQ(error_of(j), "env.lead_tim: unknown field");

  j = minimal();
  j["env"]["lead_time"] = "two";
  EXPECT_EQ(error_of(j), "env.lead_time: expected an integer");

  j = minimal();
  j["env"]["lifetime"] = 0;
  EXPECT_EQ(error_of(j).rfind("env: ", 0), 0u);

  j = minimal();
  j["policies"][1]["n_paths"] = 0;
  EXPECT_EQ(error_of(j), "policies[1].n_paths: must be >= 1");

  j = minimal();
  j["policies"][0]["kind"] = "ppo";
  EXPECT_NE(error_of(j).find("policies[0].kind"), std::string::npos);

  j = minimal();
  j["policies"].push_back({{"kind", "bms"}, {"optimize", true}});
  EXPECT_EQ(error_of(j), "policies[2].optimize: only out and pil policies can be optimized");

  j = minimal();
  j["policies"][1]["name"] = "out";
  EXPECT_EQ(error_of(j), "policies[1].name: duplicate policy name");

  j = minimal();
  j["policies"][1]["name"] = "a,b";
  EXPECT_NE(error_of(j).find("policies[1].name"), std::string::npos);

  j = minimal();
  j["demand"]["forecast"] = {1, 2};
  EXPECT_NE(error_of(j).find("exactly one"), std::string::npos);

  j = minimal();
  j["demand"]["noise"]["kind"] = "gaussian";
  EXPECT_NE(error_of(j).find("demand.noise.kind"), std::string::npos);

  j = minimal();
  j["eval"] = {{"reference", "bms"}};
  EXPECT_NE(error_of(j).find("eval.reference"), std::string::npos);

  j = minimal();
  j["eval"] = {{"seed", -1}};
  EXPECT_NE(error_of(j).find("eval.seed"), std::string::npos);

  j = minimal();
  j["grid"] = {{"lifetime", {2, 2.5}}};
  EXPECT_EQ(error_of(j), "grid.lifetime[1]: expected an integer");

  j = minimal();
  j["costs"] = {{"unit", 20}, {"lost_sales", 10}};
  EXPECT_NE(error_of(j).find("costs"), std::string::npos);

  j = minimal();
  j.erase("demand");
  EXPECT_EQ(error_of(j), "demand: missing section");
}

TEST(Config, HorizonMismatch) {
  auto j = minimal();
  j["demand"].erase("constant");
  j["demand"]["forecast"] = {1, 2, 3};
  const auto c = parse_config(j);
  try {
    build_problem(c);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()), "demand: forecast has 3 periods but env.horizon is 20");
  }
}

TEST(Config, FilesResolveAgainstConfigDir) {
  const auto dir = fs::temp_directory_path() / "perishable_config_test";
  fs::create_directories(dir);
  std::ofstream(dir / "f.csv") << "t,d\n1,4\n2,5\n3,6\n";
  std::ofstream(dir / "a.csv") << "t,action\n1,2\n2,0\n3,1\n";
  json j = minimal();
  j["env"] = {{"horizon", 3}, {"lead_time", 1}, {"lifetime", 2}};
  j["demand"] = {{"forecast_file", "f.csv"}};
  j["policies"] = {{{"kind", "replay"}, {"actions_file", "a.csv"}}};
  std::ofstream(dir / "run.json") << j.dump();
  const auto c = load_config(dir / "run.json");
  EXPECT_EQ(build_forecast(c), (std::vector<double>{4, 5, 6}));
  EXPECT_EQ(std::get<ReplayPolicy>(c.policies[0].spec).actions, (std::vector<int>{2, 0, 1}));

  std::ofstream(dir / "bad.json") << "{\"env\": ";
  try {
    load_config(dir / "bad.json");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
  j["demand"] = {{"forecast_file", "missing.csv"}};
  j["policies"] = json::array();
  std::ofstream(dir / "missing.json") << j.dump();
  const auto m = load_config(dir / "missing.json");
  try {
    build_problem(m);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find((dir / "missing.csv").string()), std::string::npos);
  }
}

TEST(Config, ActionTraceErrors) {
  const auto dir = fs::temp_directory_path();
  std::ofstream(dir / "perishable_gap.csv") << "1,2\n3,1\n";
  EXPECT_THROW(load_actions(dir / "perishable_gap.csv"), InputError);
  std::ofstream(dir / "perishable_neg.csv") << "1,-2\n";
  EXPECT_THROW(load_actions(dir / "perishable_neg.csv"), InputError);
  std::ofstream(dir / "perishable_junk.csv") << "1;2\n";
  EXPECT_THROW(load_actions(dir / "perishable_junk.csv"), InputError);
  EXPECT_THROW(load_actions(dir / "perishable_none.csv"), InputError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(PERISHABLE_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const auto c = load_config(entry.path());
    EXPECT_NO_THROW(build_problem(c));
  }
}
