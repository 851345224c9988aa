// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance --cli <perishable exe> --configs <dir> --work <scratch dir> [--only 1,4]

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "perishable/config.hpp"
#include "perishable/evaluator.hpp"
#include "perishable/experiment.hpp"

using namespace perishable;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------- 1 and 3

struct RandomEpisode {
  EnvParams params;
  CostRates rates;
  double c_hat = 0;
  std::vector<InventoryState> states;  // before each period
  std::vector<PeriodOutcome> outcomes;
  EpisodeLedger ledger;
};

// Random configuration and policy; integer demand and yields in eighths keep
// every quantity dyadic so balances can be checked without tolerance.
RandomEpisode random_episode(std::mt19937_64& rng, int index) {
  static const double kCHat[] = {0, 1, 2, 5};
  std::uniform_int_distribution<int> pick(0, 1000000);
  RandomEpisode e;
  auto& p = e.params;
  p.lifetime = 1 + pick(rng) % 5;
  p.lead_time = pick(rng) % 5;
  p.horizon = p.lead_time + 5 + pick(rng) % 50;
  p.batch_size = 1 + pick(rng) % 6;
  if (pick(rng) % 2) p.max_batches = 1 + pick(rng) % 8;
  p.yield_max = pick(rng) % 2 ? 0.5 : 0.0;
  p.batch_costs = {0, double(pick(rng) % 7), 9};
  std::sort(p.batch_costs.begin(), p.batch_costs.end());
  e.c_hat = kCHat[index % 4];
  e.rates = CostRates::from_raw({e.c_hat, double(1 + pick(rng) % 3), 10.0 + pick(rng) % 90, double(pick(rng) % 6)});

  const double level = 2 + pick(rng) % 20;
  std::vector<double> forecast(static_cast<std::size_t>(p.horizon), level);
  NoiseModel noise{NoiseKind::worst_case, 0.3};
  noise.integer_demand = true;
  const DemandScenario scenario(forecast, noise);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> eighths(4, 8);

  const PolicySpec policy = pick(rng) % 2 ? PolicySpec{OutPolicy{double(pick(rng) % 10)}}
                                          : PolicySpec{RandomPolicy{p.max_batches.value_or(5)}};
  InventoryState s = InventoryState::empty(p);
  std::vector<double> seen;
  for (int t = 1; t <= p.horizon; ++t) {
    const DecisionContext ctx{p, scenario, static_cast<std::uint64_t>(index), seen};
    const int n = decide(policy, s, ctx);
    const double demand = scenario.realize(t, normal(rng));
    const double z = p.yield_max > 0 ? eighths(rng) / 8.0 : 1.0;
    e.states.push_back(s);
    e.outcomes.push_back(apply_period(s, p, e.rates, n * p.batch_size, demand, z));
    e.ledger.record(e.outcomes.back(), p.lead_time);
    seen.push_back(demand);
  }
  e.states.push_back(s);
  finalize_episode(s, p, e.rates, e.ledger);
  return e;
}

std::vector<RandomEpisode> criterion_one_episodes() {
  std::mt19937_64 rng(20240601);
  std::vector<RandomEpisode> out;
  for (int i = 0; i < 100; ++i) out.push_back(random_episode(rng, i));
  return out;
}

Verdict lemma_identity() {
  const auto start = std::chrono::steady_clock::now();
  const auto episodes = criterion_one_episodes();
  double worst = 0;
  for (const auto& e : episodes) {
    double demand = 0;
    for (const auto& o : e.outcomes) {
      if (o.t > e.params.lead_time) demand += o.demand;
    }
    const double err = std::abs(e.ledger.raw_total - e.ledger.transformed_total - e.c_hat * demand);
    worst = std::max(worst, err / std::max(1.0, std::abs(e.ledger.raw_total)));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-6 && secs < 5,
          fmt::format("100 episodes, worst relative error {:.3g}, {:.2f} s", worst, secs)};
}

Verdict balance_and_fifo() {
  const auto episodes = criterion_one_episodes();
  int periods = 0;
  std::string problem;
  for (std::size_t k = 0; k < episodes.size() && problem.empty(); ++k) {
    const auto& e = episodes[k];
    const int m = e.params.lifetime;
    const int L = e.params.lead_time;
    for (std::size_t i = 0; i < e.outcomes.size() && problem.empty(); ++i) {
      ++periods;
      const auto& before = e.states[i].buckets;
      const auto& after = e.states[i + 1].buckets;
      const auto& o = e.outcomes[i];
      auto fail = [&](const std::string& what) { problem = fmt::format("episode {} t={}: {}", k, o.t, what); };

      double on_hand = 0;
      for (int j = 0; j < m - 1; ++j) on_hand += before[j];
      const double incoming = L >= 1 ? before[m - 1] : o.order_units;
      if (o.arrived != incoming * o.yield) fail("arrival");
      if (on_hand + o.arrived != o.sales + o.expired + o.end_on_hand) fail("on-hand balance");
      if (o.sales + o.lost_sales != o.demand) fail("demand balance");
      double pos_before = 0, pos_after = 0;
      for (double x : before) pos_before += x;
      for (double x : after) pos_after += x;
      if (pos_before + o.order_units - (incoming - o.arrived) - o.sales - o.expired != pos_after)
        fail("position balance");

      // stock left by age after demand: oldest first, fresh arrival last
      std::vector<double> stock(before.begin(), before.begin() + (m - 1));
      stock.push_back(o.arrived);
      std::vector<double> left(stock.size());
      left[0] = o.expired;
      for (int j = 1; j < m; ++j) left[j] = after[j - 1];
      bool drained = true;  // every older slot emptied so far
      for (std::size_t j = 0; j < stock.size(); ++j) {
        if (left[j] > stock[j]) fail("stock grew");
        if (left[j] < stock[j] && !drained) fail("younger stock sold before older");
        drained = drained && left[j] == 0;
      }
      if (o.lost_sales > 0 && !drained) fail("lost sales with stock on hand");
      if (L >= 1) {
        for (int j = m; j < m + L - 1; ++j) {
          if (after[j - 1] != before[j]) fail("pipeline shift");
        }
        if (after.back() != o.order_units) fail("order placement");
      }
    }
  }
  return {problem.empty(), problem.empty() ? fmt::format("{} periods over 100 episodes", periods) : problem};
}

// ---------------------------------------------------------------- 2

Verdict step_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> qty(0, 40);
  std::uniform_int_distribution<int> eighths(0, 8);
  const auto rates = CostRates::from_raw({1, 1, 10, 2});
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    EnvParams p;
    p.lifetime = 1 + trial % 5;
    p.lead_time = 1 + (trial / 5) % 4;
    p.horizon = 100;
    InventoryState s{1 + qty(rng) % 90, std::vector<double>(p.state_size())};
    for (auto& x : s.buckets) x = qty(rng) / 4.0;
    auto naive = oracle::NaiveSim::from_buckets(p.lifetime, p.lead_time, s.t, s.buckets);
    const double order = qty(rng), demand = qty(rng) / 2.0, z = eighths(rng) / 8.0;
    const auto f = naive.step(order, demand, z);
    const auto r = step(s, p, rates, order, demand, z);
    const bool same = r.state.buckets == naive.to_buckets() && r.state.t == naive.t && r.outcome.sales == f.sales &&
                      r.outcome.lost_sales == f.lost && r.outcome.expired == f.expired &&
                      r.outcome.arrived == f.arrived && r.outcome.transformed.holding == f.carried;
    mismatches += !same;
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 5, fmt::format("1000 transitions, {} mismatches, {:.2f} s", mismatches, secs)};
}

// ---------------------------------------------------------------- 4

Verdict bound_ordering(const fs::path& configs) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig base = load_config(configs / "scenario1-worst-case.json");
  base.eval.n_episodes = 2000;
  base.eval.crn = true;
  base.eval.parallel = threads();
  const auto cells = expand_grid(base);
  int ok = 0;
  std::vector<std::string> misses;
  for (const auto& cell : cells) {
    const auto ctx = bound_context(build_problem(cell_config(base, cell)));
    const auto r = run_cell(base, cell);
    bool good = r.bounds.conforming;
    for (const auto& p : r.policies) {
      const bool is_out = p.kind == "out";
      const double s = p.param.value_or(NAN);
      const double lb_opt = is_out ? r.bounds.out_lb_opt : r.bounds.pil_lb_opt;
      const double ub_opt = is_out ? r.bounds.out_ub_opt : r.bounds.pil_ub_opt;
      const double bound = is_out ? out_lb(s, ctx) : pil_ub(s, ctx);
      const auto& res = p.result;
      const bool ordered = std::floor(lb_opt) <= s && s <= std::ceil(ub_opt);
      const bool cost_ok = is_out ? res.mean >= bound - 2 * res.se : res.mean <= bound + 2 * res.se;
      const auto line = fmt::format("cell {:>2} {:<3} LB* {:7.3f}  s* {:>3}  UB* {:7.3f}  cost {:9.2f} +- {:5.2f}  {} {:9.2f}",
                                    cell.index, p.name, lb_opt, s, ub_opt, res.mean, res.se, is_out ? "LB" : "UB", bound);
      std::cout << "  " << line << (ordered && cost_ok ? "" : "  <-") << "\n" << std::flush;
      if (!ordered || !cost_ok) {
        misses.push_back(line);
        good = false;
      }
    }
    ok += good;
  }
  const double secs = seconds_since(start);
  std::string detail = fmt::format("{}/{} cells, N=2000 CRN, {:.0f} s", ok, cells.size(), secs);
  for (const auto& m : misses) detail += "\n    " + m;
  return {ok == static_cast<int>(cells.size()) && cells.size() == 24 && secs <= 1800, detail};
}

// ---------------------------------------------------------------- 5

Verdict newsvendor() {
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  for (double b : {10.0, 100.0}) {
    EnvParams p;
    p.horizon = 100;
    p.lead_time = 0;
    p.lifetime = 100;  // nothing expires before the horizon
    p.batch_size = 0.01;  // near-continuous orders
    const double d = 100, sigma = 10;
    const Problem problem{p, CostRates::from_raw({0, 1, b, 2}),
                          DemandScenario(std::vector<double>(100, d), {NoiseKind::worst_case, sigma / d})};
    const auto ctx = bound_context(problem);
    const EvalConfig cfg{2000, 5, true, threads()};
    const auto sr = optimize_parameter(problem, OutPolicy{}, search_interval(PolicyKind::out, ctx), cfg);
    const double target = sigma * standard_normal_quantile(b / (b + 1));
    const bool ok = std::abs(sr.chosen - target) <= 1.0;
    pass = pass && ok;
    detail += fmt::format("b={}: s*={} vs {:.3f}; ", b, sr.chosen, target);
  }
  const double secs = seconds_since(start);
  return {pass && secs < 300, detail + fmt::format("{:.1f} s", secs)};
}

// ---------------------------------------------------------------- 6

Verdict pil_beats_out(const fs::path& configs) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg = load_config(configs / "table4-cell.json");
  cfg.eval.parallel = threads();
  const auto r = run_cell(cfg, expand_grid(cfg).front());
  const EvalResult* out = nullptr;
  const EvalResult* pil = nullptr;
  std::string params;
  for (const auto& p : r.policies) {
    if (p.kind == "out") out = &p.result;
    if (p.kind == "pil") pil = &p.result;
    params += fmt::format("{}={} ", p.name, p.param.value_or(0));
  }
  const double margin = 0.8 * out->mean - pil->mean;
  const double se = std::sqrt(0.64 * out->se * out->se + pil->se * pil->se);
  const double secs = seconds_since(start);
  return {margin > 2 * se && secs <= 1200,
          fmt::format("{}OUT {:.1f}+-{:.1f}, PIL {:.1f}+-{:.1f} ({:.1f}% below), {:.0f} s", params, out->mean, out->se,
                      pil->mean, pil->se, 100 * (1 - pil->mean / out->mean), secs)};
}

// ---------------------------------------------------------------- 7

Verdict determinism(const std::string& cli, const fs::path& configs, const fs::path& work) {
  const auto config = (configs / "scenario1-worst-case.json").string();
  std::vector<fs::path> dirs{work / "determinism-a", work / "determinism-b"};
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    fs::remove_all(dirs[i]);
    const auto cmd = fmt::format("\"{}\" experiment --config \"{}\" --episodes 100 --seed 11 --parallel {} --out \"{}\" "
                                 "> \"{}.log\" 2>&1",
                                 cli, config, i == 0 ? 1 : threads(), dirs[i].string(), dirs[i].string());
    if (std::system(cmd.c_str()) != 0) return {false, "experiment command failed: " + cmd};
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::vector<std::string> differ;
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".txt") continue;
    ++compared;
    if (!fs::exists(dirs[1] / entry.path().filename()) ||
        slurp(entry.path()) != slurp(dirs[1] / entry.path().filename()))
      differ.push_back(entry.path().filename().string());
  }
  std::string detail = fmt::format("{} report files compared", compared);
  for (const auto& d : differ) detail += ", differs: " + d;
  return {differ.empty() && compared >= 7, detail};
}

// ---------------------------------------------------------------- 8

struct MeanSe {
  double mean = 0, se = 0;
};

MeanSe holding_of(const EvalResult& r) {
  MeanSe m;
  const double n = r.episodes.size();
  for (const auto& e : r.episodes) m.mean += e.breakdown.holding / n;
  double ss = 0;
  for (const auto& e : r.episodes) ss += std::pow(e.breakdown.holding - m.mean, 2);
  m.se = std::sqrt(ss / (n - 1) / n);
  return m;
}

// pooled ratio sum(sales) / sum(demand) with a delta-method standard error
MeanSe service_of(const EvalResult& r) {
  const double n = r.episodes.size();
  double sales = 0, demand = 0;
  for (const auto& e : r.episodes) {
    sales += e.sales;
    demand += e.demand;
  }
  MeanSe m;
  m.mean = sales / demand;
  double ss = 0;
  for (const auto& e : r.episodes) ss += std::pow(e.sales - m.mean * e.demand, 2);
  m.se = std::sqrt(ss / (n - 1) / n) / (demand / n);
  return m;
}

Verdict bms_excess_stock(const fs::path& configs) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg = load_config(configs / "bms-base.json");
  cfg.eval.parallel = threads();
  const auto r = run_cell(cfg, expand_grid(cfg).front());
  const PolicyOutcome* out = nullptr;
  const PolicyOutcome* bms = nullptr;
  for (const auto& p : r.policies) {
    if (p.kind == "out") out = &p;
    if (p.kind == "bms") bms = &p;
  }
  const auto service = service_of(bms->result);
  const auto hb = holding_of(bms->result);
  const auto ho = holding_of(out->result);
  const bool service_ok = service.mean - 2 * service.se >= 0.99;
  const double excess = hb.mean - 1.5 * ho.mean;
  const bool holding_ok = excess > 2 * std::sqrt(hb.se * hb.se + 2.25 * ho.se * ho.se);
  return {service_ok && holding_ok,
          fmt::format("BMS service {:.4f}+-{:.4f}; holding BMS {:.0f}+-{:.0f} vs OUT(s={}) {:.0f}+-{:.0f} "
                      "(ratio {:.2f}), {:.0f} s",
                      service.mean, service.se, hb.mean, hb.se, out->param.value_or(0), ho.mean, ho.se,
                      hb.mean / ho.mean, seconds_since(start))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string cli;
  std::string configs;
  std::string work = "acceptance_work";
  std::string only;
  app.add_option("--cli", cli, "path of the perishable executable")->required();
  app.add_option("--configs", configs, "directory of the shipped configs")->required();
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "comma-separated criteria to run");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string x; std::getline(ss, x, ',');) selected.insert(std::stoi(x));

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"lost-sales cost transformation identity", lemma_identity},
      {"transitions match the lot simulator", step_oracle},
      {"mass balance and FIFO", balance_and_fifo},
      {"bounds bracket the simulated optima", [&] { return bound_ordering(configs); }},
      {"newsvendor optimum", newsvendor},
      {"PIL at least 20% below OUT", [&] { return pil_beats_out(configs); }},
      {"experiment reports are byte-identical", [&] { return determinism(cli, configs, work); }},
      {"static BMS plan holds excess stock", [&] { return bms_excess_stock(configs); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << fmt::format("{} criterion {}: {} | {}\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail)
              << std::flush;
  }
  return failed == 0 ? 0 : 1;
}
