#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "perishable/demand.hpp"
#include "perishable/env.hpp"

namespace perishable {

/// Unrounded order quantity and the whole batches actually shipped.
struct OrderDecision {
  double quantity = 0.0;
  int batches = 0;
};

/// ceil(q / Q), clamped to the batch limit.
int to_batches(double quantity, const EnvParams& params);

/// Order-up-to S_t = s + d_t + ... + d_{t+L} against the full inventory
/// position (on hand plus pipeline).
OrderDecision out_order(const InventoryState& state, double safety_stock,
                        const DemandScenario& scenario, const EnvParams& params);

/// Cumulative expiry estimate over `periods` periods assuming demand equals
/// its forecast: O_k = max(x_1 + .. + x_k - (d_1 + .. + d_k), O_{k-1}),
/// O_0 = 0. `stock[i]` is the quantity expiring at the end of period i+1.
double bms_expired_estimate(std::span<const double> stock, std::span<const double> forecast,
                            int periods);

double bms_safety_stock(double mse, double k1, double k2, int lead_time);

OrderDecision bms_order(const InventoryState& state, double safety_stock,
                        const DemandScenario& scenario, const EnvParams& params);

struct ProjectedAdjustment {
  double expired = 0.0;
  double lost = 0.0;
};

/// Monte-Carlo estimate of E[sum O_j] and E[sum l_j] over j = t..t+L-1 with
/// no new orders, pipeline arrivals applied and demand and yield drawn from
/// their true distributions.
ProjectedAdjustment estimate_projected_adjustment(const InventoryState& state,
                                                  const EnvParams& params,
                                                  const DemandScenario& scenario, int n_paths,
                                                  std::uint64_t seed);

/// q = u + sum_{j=t}^{t+L} d_j - position + E[sum O] - E[sum l].
OrderDecision pil_order(const InventoryState& state, double safety_stock,
                        const DemandScenario& scenario, const EnvParams& params,
                        const ProjectedAdjustment& adjustment);

struct OutPolicy {
  double s = 0.0;
};

struct PilPolicy {
  double u = 0.0;
  int n_paths = 2000;
};

enum class BmsMode { formula, static_replay };

/// Where the MSE entering the BMS safety stock comes from. `realized` is the
/// rolling mean of observed squared forecast errors (falling back to the
/// known sigma_t^2 until `window` observations exist); `planned` is the
/// rolling mean of sigma_j^2, which is what a planner has before the fact.
enum class MseSource { realized, planned };

struct BmsPolicy {
  double k1 = 2.3263478740408408;  // 99% normal quantile
  double k2 = 0.0;
  int mse_window = 12;
  BmsMode mode = BmsMode::static_replay;
  MseSource mse_source = MseSource::realized;
  std::vector<int> plan;  // static_replay: batches per period
};

struct ReplayPolicy {
  std::vector<int> actions;
};

/// Uniform over 0..max_batches; a reference point for learned policies.
struct RandomPolicy {
  int max_batches = 6;
};

using PolicySpec = std::variant<OutPolicy, PilPolicy, BmsPolicy, ReplayPolicy, RandomPolicy>;

std::string policy_name(const PolicySpec& policy);

/// What a policy may look at besides the inventory vector.
struct DecisionContext {
  const EnvParams& params;
  const DemandScenario& scenario;
  std::uint64_t episode_seed = 0;
  std::span<const double> realized_demand;  // D_1..D_{t-1}
};

/// Batches to order in period state.t. Always 0 once ordering is no longer
/// allowed. Throws std::invalid_argument if a replayed action is out of range.
int decide(const PolicySpec& policy, const InventoryState& state, const DecisionContext& ctx);

double bms_mse(const BmsPolicy& policy, int t, const DemandScenario& scenario,
               std::span<const double> realized_demand);

/// Runs one deterministic episode (D_t = d_t, yield at its mean) under the
/// BMS rule and records the batches ordered in every period.
std::vector<int> bms_precompute_static_plan(const DemandScenario& scenario,
                                            const EnvParams& params, const CostRates& rates,
                                            const BmsPolicy& policy);

/// Fills in anything a policy needs before its first episode (the static
/// BMS plan). Other policies are returned unchanged.
PolicySpec prepare_policy(PolicySpec policy, const DemandScenario& scenario,
                          const EnvParams& params, const CostRates& rates);

}  // namespace perishable
