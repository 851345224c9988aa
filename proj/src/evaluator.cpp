#include "perishable/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace perishable {

void Problem::validate() const {
  params.validate();
  if (scenario.horizon() != params.horizon) {
    throw std::invalid_argument("forecast length " + std::to_string(scenario.horizon()) +
                                " does not match env.horizon " + std::to_string(params.horizon));
  }
}

void EvalConfig::validate() const {
  if (n_episodes < 1) throw std::invalid_argument("eval.episodes must be >= 1");
  if (parallel < 1) throw std::invalid_argument("eval.parallel must be >= 1");
}

std::uint64_t episode_seed(const EvalConfig& config, std::uint64_t stream, int episode) {
  const std::uint64_t master = config.crn ? config.master_seed : derive_seed(config.master_seed, stream + 1);
  return derive_seed(master, static_cast<std::uint64_t>(episode));
}

EpisodeNoise::EpisodeNoise(std::uint64_t seed)
    : demand_rng_(derive_seed(seed, kDemandStream)), yield_rng_(derive_seed(seed, kYieldStream)) {}

double EpisodeNoise::demand(const DemandScenario& scenario, int t) {
  return scenario.realize(t, normal_(demand_rng_));
}

double EpisodeNoise::yield(double yield_max) { return draw_yield(yield_rng_, yield_max); }

EpisodeLedger run_episode(const Problem& problem, const PolicySpec& policy, std::uint64_t seed) {
  const auto& params = problem.params;
  EpisodeNoise noise(seed);
  InventoryState state = InventoryState::empty(params);
  EpisodeLedger ledger;
  ledger.periods.reserve(static_cast<std::size_t>(params.horizon));
  std::vector<double> realized;
  realized.reserve(static_cast<std::size_t>(params.horizon));

  for (int t = 1; t <= params.horizon; ++t) {
    const DecisionContext ctx{params, problem.scenario, seed, realized};
    const int n = decide(policy, state, ctx);
    const double demand = noise.demand(problem.scenario, t);
    const double z = noise.yield(params.yield_max);
    ledger.record(apply_period(state, params, problem.rates, n * params.batch_size, demand, z),
                  params.lead_time);
    realized.push_back(demand);
  }
  finalize_episode(state, params, problem.rates, ledger);
  return ledger;
}

double service_level(const EpisodeLedger& ledger, int lead_time) {
  double demand = 0.0;
  double sales = 0.0;
  for (const auto& p : ledger.periods) {
    if (p.t <= lead_time) continue;
    demand += p.demand;
    sales += p.sales;
  }
  return demand > 0.0 ? sales / demand : 1.0;
}

namespace {

EpisodeSummary summarize(const EpisodeLedger& ledger, int lead_time) {
  EpisodeSummary s;
  s.cost = ledger.transformed_total;
  s.raw_cost = ledger.raw_total;
  s.breakdown = ledger.transformed;
  for (const auto& p : ledger.periods) {
    if (p.t <= lead_time) continue;
    s.demand += p.demand;
    s.sales += p.sales;
  }
  return s;
}

template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace

EvalResult evaluate(const Problem& problem, const PolicySpec& policy, const EvalConfig& config,
                    std::uint64_t stream) {
  config.validate();
  problem.validate();
  const PolicySpec prepared = prepare_policy(policy, problem.scenario, problem.params, problem.rates);

  EvalResult r;
  r.n_episodes = config.n_episodes;
  r.episodes.resize(static_cast<std::size_t>(config.n_episodes));
  parallel_for(config.n_episodes, config.parallel, [&](int i) {
    const auto ledger = run_episode(problem, prepared, episode_seed(config, stream, i));
    r.episodes[static_cast<std::size_t>(i)] = summarize(ledger, problem.params.lead_time);
  });

  // reduction in episode order so the result does not depend on scheduling
  double demand = 0.0;
  double sales = 0.0;
  for (const auto& e : r.episodes) {
    r.mean += e.cost;
    r.raw_mean += e.raw_cost;
    r.breakdown += e.breakdown;
    demand += e.demand;
    sales += e.sales;
  }
  const double n = config.n_episodes;
  r.mean /= n;
  r.raw_mean /= n;
  auto& b = r.breakdown;
  for (double* x : {&b.ordering_fixed, &b.ordering_unit, &b.holding, &b.lost_sales, &b.expiration, &b.yield_loss})
    *x /= n;
  if (config.n_episodes > 1) {
    double ss = 0.0;
    for (const auto& e : r.episodes) ss += (e.cost - r.mean) * (e.cost - r.mean);
    r.std = std::sqrt(ss / (n - 1.0));
  }
  r.se = r.std / std::sqrt(n);
  r.service_level = demand > 0.0 ? sales / demand : 1.0;
  return r;
}

PolicySpec with_parameter(const PolicySpec& base, double value) {
  PolicySpec p = base;
  if (auto* out = std::get_if<OutPolicy>(&p)) {
    out->s = value;
  } else if (auto* pil = std::get_if<PilPolicy>(&p)) {
    pil->u = value;
  } else if (auto* bms = std::get_if<BmsPolicy>(&p)) {
    bms->k2 = value;
    bms->plan.clear();
  } else {
    throw std::invalid_argument("policy " + policy_name(base) + " has no tunable parameter");
  }
  return p;
}

SearchResult optimize_parameter(const Problem& problem, const PolicySpec& base,
                                SearchInterval interval, const EvalConfig& config,
                                const SearchOptions& options) {
  if (interval.lo > interval.hi) throw std::invalid_argument("search interval is empty");
  std::map<int, EvalResult> curve;
  auto run = [&](int v) {
    curve.emplace(v, evaluate(problem, with_parameter(base, v), config,
                              static_cast<std::uint64_t>(static_cast<std::int64_t>(v) + (1ll << 32))));
  };
  auto best_value = [&] {
    auto best = curve.begin();
    for (auto it = curve.begin(); it != curve.end(); ++it) {
      if (it->second.mean < best->second.mean) best = it;
    }
    return best->first;
  };
  for (int v = interval.lo; v <= interval.hi; ++v) run(v);
  if (options.extend_at_edges) {
    for (int added = 0; added < options.max_extension; ++added) {
      const int best = best_value();
      const int lo = curve.begin()->first;
      const int hi = curve.rbegin()->first;
      if (hi - best < options.lookahead && best > lo) {
        run(hi + 1);
      } else if (best - lo < options.lookahead && best < hi) {
        run(lo - 1);
      } else {
        break;
      }
    }
  }

  SearchResult sr;
  sr.interval = {curve.begin()->first, curve.rbegin()->first};
  const int chosen = best_value();
  for (auto& [v, r] : curve) {
    if (v == chosen) sr.best_index = sr.candidates.size();
    sr.candidates.push_back(v);
    sr.results.push_back(std::move(r));
  }
  sr.chosen = chosen;
  return sr;
}

double percentage_gap(double cost, double reference) {
  if (reference == 0.0) throw std::invalid_argument("reference cost is 0; gap undefined");
  return (cost - reference) / reference * 100.0;
}

std::vector<GapRow> compare(const Problem& problem, const std::vector<PolicySpec>& policies,
                            std::size_t reference, const EvalConfig& config) {
  if (policies.size() < 2) throw std::invalid_argument("compare needs at least two policies");
  if (reference >= policies.size()) throw std::invalid_argument("reference index out of range");
  std::vector<GapRow> rows;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const auto r = evaluate(problem, policies[i], config, i);
    rows.push_back({policy_name(policies[i]), r.mean, r.se, 0.0});
  }
  const double ref = rows[reference].mean;
  for (auto& row : rows) row.gap = percentage_gap(row.mean, ref);
  return rows;
}

BoundContext bound_context(const Problem& problem) {
  BoundContext c;
  c.lead_time = problem.params.lead_time;
  c.lifetime = problem.params.lifetime;
  c.horizon = problem.params.horizon;
  c.holding = problem.rates.transformed.holding;
  c.lost_sales = problem.rates.transformed.lost_sales;
  c.expiration = problem.rates.transformed.expiration;
  const auto& sigma = problem.scenario.sigma();
  c.sigma = sigma.empty() ? 0.0 : *std::max_element(sigma.begin(), sigma.end());
  c.forecast = problem.scenario.forecast();
  return c;
}

bool bounds_conforming(const Problem& problem) {
  const auto& k = problem.params.batch_costs;
  const bool no_fixed = std::all_of(k.begin(), k.end(), [](double x) { return x == 0.0; });
  const auto& sigma = problem.scenario.sigma();
  const bool stationary = std::all_of(sigma.begin(), sigma.end(),
                                      [&](double s) { return s == sigma.front(); });
  return no_fixed && problem.params.yield_max == 0.0 && stationary;
}

}  // namespace perishable
