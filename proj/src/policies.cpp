#include "perishable/policies.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "perishable/rng.hpp"

namespace perishable {

namespace {

void require_window(const InventoryState& state, const DemandScenario& scenario,
                    const EnvParams& params) {
  if (state.t + params.lead_time > scenario.horizon()) {
    throw std::invalid_argument("forecast does not cover periods t..t+L");
  }
}

OrderDecision finish(double quantity, const EnvParams& params) {
  OrderDecision d;
  d.quantity = std::max(quantity, 0.0);
  d.batches = to_batches(d.quantity, params);
  return d;
}

}  // namespace

int to_batches(double quantity, const EnvParams& params) {
  int n = batches_for(std::max(quantity, 0.0), params);
  if (params.max_batches) n = std::min(n, *params.max_batches);
  return n;
}

OrderDecision out_order(const InventoryState& state, double safety_stock,
                        const DemandScenario& scenario, const EnvParams& params) {
  if (!params.ordering_allowed(state.t)) return {};
  require_window(state, scenario, params);
  const double target = safety_stock + scenario.forecast_sum(state.t, state.t + params.lead_time);
  return finish(target - state.position(), params);
}

double bms_expired_estimate(std::span<const double> stock, std::span<const double> forecast,
                            int periods) {
  double cumulative_stock = 0.0;
  double cumulative_demand = 0.0;
  double estimate = 0.0;
  for (int k = 0; k < periods; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (i < stock.size()) cumulative_stock += stock[i];
    if (i < forecast.size()) cumulative_demand += forecast[i];
    estimate = std::max(cumulative_stock - cumulative_demand, estimate);
  }
  return estimate;
}

double bms_safety_stock(double mse, double k1, double k2, int lead_time) {
  if (mse < 0.0) throw std::invalid_argument("mse must be >= 0");
  return k1 * std::sqrt((lead_time + 1.0) * mse) + k2;
}

OrderDecision bms_order(const InventoryState& state, double safety_stock,
                        const DemandScenario& scenario, const EnvParams& params) {
  if (!params.ordering_allowed(state.t)) return {};
  require_window(state, scenario, params);
  const int L = params.lead_time;
  std::vector<double> window(static_cast<std::size_t>(L));
  for (int k = 0; k < L; ++k) window[static_cast<std::size_t>(k)] = scenario.forecast_at(state.t + k);
  const double expiring = bms_expired_estimate(state.buckets, window, L);
  const double target = safety_stock + scenario.forecast_sum(state.t, state.t + L);
  return finish(target - (state.position() - expiring), params);
}

ProjectedAdjustment estimate_projected_adjustment(const InventoryState& state,
                                                  const EnvParams& params,
                                                  const DemandScenario& scenario, int n_paths,
                                                  std::uint64_t seed) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  const int L = params.lead_time;
  const int last = std::min(state.t + L - 1, params.horizon);
  if (last < state.t) return {};

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> work(state.buckets.size());
  double expired = 0.0;
  double lost = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    std::copy(state.buckets.begin(), state.buckets.end(), work.begin());
    for (int j = state.t; j <= last; ++j) {
      const double z = draw_yield(rng, params.yield_max);
      const double demand = scenario.realize(j, normal(rng));
      const PeriodFlows f = advance_buckets(work, params.lifetime, L, 0.0, demand, z);
      expired += f.expired;
      lost += f.lost;
    }
  }
  return {expired / n_paths, lost / n_paths};
}

OrderDecision pil_order(const InventoryState& state, double safety_stock,
                        const DemandScenario& scenario, const EnvParams& params,
                        const ProjectedAdjustment& adjustment) {
  if (!params.ordering_allowed(state.t)) return {};
  require_window(state, scenario, params);
  const double q = safety_stock + scenario.forecast_sum(state.t, state.t + params.lead_time) -
                   state.position() + adjustment.expired - adjustment.lost;
  return finish(q, params);
}

std::string policy_name(const PolicySpec& policy) {
  struct Visitor {
    std::string operator()(const OutPolicy&) const { return "out"; }
    std::string operator()(const PilPolicy&) const { return "pil"; }
    std::string operator()(const BmsPolicy&) const { return "bms"; }
    std::string operator()(const ReplayPolicy&) const { return "replay"; }
    std::string operator()(const RandomPolicy&) const { return "random"; }
  };
  return std::visit(Visitor{}, policy);
}

double bms_mse(const BmsPolicy& policy, int t, const DemandScenario& scenario,
               std::span<const double> realized_demand) {
  const int W = policy.mse_window;
  if (W < 1) throw std::invalid_argument("bms mse_window must be >= 1");
  if (policy.mse_source == MseSource::planned) {
    double sum = 0.0;
    int count = 0;
    for (int j = std::max(1, t - W + 1); j <= t; ++j, ++count) sum += std::pow(scenario.sigma_at(j), 2);
    return count > 0 ? sum / count : 0.0;
  }
  const int observed = std::min(static_cast<int>(realized_demand.size()), t - 1);
  if (observed < W) return std::pow(scenario.sigma_at(t), 2);
  double sum = 0.0;
  for (int j = observed - W + 1; j <= observed; ++j) {
    const double err = realized_demand[static_cast<std::size_t>(j - 1)] - scenario.forecast_at(j);
    sum += err * err;
  }
  return sum / W;
}

int decide(const PolicySpec& policy, const InventoryState& state, const DecisionContext& ctx) {
  const auto& params = ctx.params;
  if (!params.ordering_allowed(state.t)) return 0;
  const int t = state.t;

  struct Visitor {
    const InventoryState& state;
    const DecisionContext& ctx;
    int t;

    int operator()(const OutPolicy& p) const {
      return out_order(state, p.s, ctx.scenario, ctx.params).batches;
    }
    int operator()(const PilPolicy& p) const {
      const auto seed = derive_seed(derive_seed(ctx.episode_seed, kEstimatorStream),
                                    static_cast<std::uint64_t>(t));
      const auto adj = estimate_projected_adjustment(state, ctx.params, ctx.scenario, p.n_paths, seed);
      return pil_order(state, p.u, ctx.scenario, ctx.params, adj).batches;
    }
    int operator()(const BmsPolicy& p) const {
      if (p.mode == BmsMode::static_replay) {
        if (p.plan.size() < static_cast<std::size_t>(t))
          throw std::invalid_argument("static BMS plan is shorter than the horizon");
        return p.plan[static_cast<std::size_t>(t - 1)];
      }
      const double mse = bms_mse(p, t, ctx.scenario, ctx.realized_demand);
      const double ss = bms_safety_stock(mse, p.k1, p.k2, ctx.params.lead_time);
      return bms_order(state, ss, ctx.scenario, ctx.params).batches;
    }
    int operator()(const ReplayPolicy& p) const {
      if (p.actions.size() < static_cast<std::size_t>(t))
        throw std::invalid_argument("replayed action trace is shorter than the horizon");
      return p.actions[static_cast<std::size_t>(t - 1)];
    }
    int operator()(const RandomPolicy& p) const {
      Rng rng(derive_seed(derive_seed(ctx.episode_seed, kPolicyStream), static_cast<std::uint64_t>(t)));
      return std::uniform_int_distribution<int>(0, p.max_batches)(rng);
    }
  };
  const int n = std::visit(Visitor{state, ctx, t}, policy);
  if (n < 0 || (params.max_batches && n > *params.max_batches)) {
    throw std::invalid_argument("policy " + policy_name(policy) + " emitted " + std::to_string(n) +
                                " batches in period " + std::to_string(t));
  }
  return n;
}

std::vector<int> bms_precompute_static_plan(const DemandScenario& scenario,
                                            const EnvParams& params, const CostRates& rates,
                                            const BmsPolicy& policy) {
  BmsPolicy rule = policy;
  rule.mode = BmsMode::formula;
  rule.mse_source = MseSource::planned;
  const PolicySpec spec = rule;

  std::vector<int> plan(static_cast<std::size_t>(params.horizon), 0);
  InventoryState state = InventoryState::empty(params);
  const auto& forecast = scenario.forecast();
  for (int t = 1; t <= params.horizon; ++t) {
    const DecisionContext ctx{params, scenario, 0,
                              std::span<const double>(forecast.data(), static_cast<std::size_t>(t - 1))};
    const int n = decide(spec, state, ctx);
    plan[static_cast<std::size_t>(t - 1)] = n;
    apply_period(state, params, rates, n * params.batch_size, scenario.forecast_at(t), params.mean_yield());
  }
  return plan;
}

PolicySpec prepare_policy(PolicySpec policy, const DemandScenario& scenario,
                          const EnvParams& params, const CostRates& rates) {
  if (auto* bms = std::get_if<BmsPolicy>(&policy)) {
    if (bms->mode == BmsMode::static_replay && bms->plan.empty()) {
      bms->plan = bms_precompute_static_plan(scenario, params, rates, *bms);
    }
  }
  return policy;
}

}  // namespace perishable
