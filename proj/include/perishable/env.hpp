#pragma once

#include <optional>
#include <span>
#include <vector>

#include "perishable/rng.hpp"

namespace perishable {

/// Static description of the warehouse and its supplier.
///
/// Periods are numbered 1..horizon. An order placed in period t arrives at
/// the start of period t + lead_time and can then be sold for `lifetime`
/// periods, the last of which ends with the leftover expiring.
struct EnvParams {
  int horizon = 60;
  int lead_time = 2;
  int lifetime = 2;
  double batch_size = 1.0;
  std::optional<int> max_batches;  // unbounded when empty
  double yield_max = 0.0;          // maximum fractional production loss
  /// Fixed ordering cost indexed by batch count. Counts beyond the end of
  /// the table reuse the last entry, so {0} means K == 0.
  std::vector<double> batch_costs{0.0};

  void validate() const;

  /// Length of the inventory vector: m - 1 on-hand buckets plus L pipeline
  /// buckets (the first of which arrives in the current period).
  std::size_t state_size() const {
    return static_cast<std::size_t>(lifetime + lead_time - 1);
  }
  bool ordering_allowed(int t) const { return t <= horizon - lead_time; }
  double mean_yield() const { return 1.0 - 0.5 * yield_max; }
};

/// Cost rates as the business quotes them (hatted quantities).
struct RawCosts {
  double unit = 0.0;        // per unit ordered
  double holding = 1.0;     // per unit carried past demand
  double lost_sales = 10.0; // per unit of unmet demand
  double expiration = 2.0;  // per unit expired
};

/// Rates after folding the unit ordering cost into penalty and expiration.
struct TransformedCosts {
  double holding = 1.0;
  double lost_sales = 10.0;
  double expiration = 2.0;
};

TransformedCosts transform_costs(const RawCosts& raw);

struct CostRates {
  RawCosts raw;
  TransformedCosts transformed;

  static CostRates from_raw(const RawCosts& raw) { return {raw, transform_costs(raw)}; }
};

/// x_t: buckets[i - 1] holds x_{t,i}. Indices 1..m-1 are on hand by remaining
/// lifetime, index m is the order arriving in period t (before yield) and
/// m+1..m+L-1 are further out in the pipeline.
struct InventoryState {
  int t = 1;
  std::vector<double> buckets;

  static InventoryState empty(const EnvParams& params) {
    return {1, std::vector<double>(params.state_size(), 0.0)};
  }
  double on_hand(const EnvParams& params) const;
  double position() const;  // on hand plus everything in transit

  bool operator==(const InventoryState&) const = default;
};

struct CostBreakdown {
  double ordering_fixed = 0.0;
  double ordering_unit = 0.0;
  double holding = 0.0;
  double lost_sales = 0.0;
  double expiration = 0.0;
  double yield_loss = 0.0;

  double total() const {
    return ordering_fixed + ordering_unit + holding + lost_sales + expiration + yield_loss;
  }
  CostBreakdown& operator+=(const CostBreakdown& o);
  bool operator==(const CostBreakdown&) const = default;
};

struct PeriodOutcome {
  int t = 0;
  double arrived = 0.0;  // post-yield units joining stock this period
  double yield = 1.0;
  double order_units = 0.0;
  int order_batches = 0;
  double demand = 0.0;
  double sales = 0.0;
  double lost_sales = 0.0;
  double expired = 0.0;
  double end_on_hand = 0.0;
  /// ĉ is charged only in `raw`; `transformed` uses the Lemma-1 rates and
  /// carries ĉ on production losses in `yield_loss`.
  CostBreakdown raw;
  CostBreakdown transformed;

  bool operator==(const PeriodOutcome&) const = default;
};

/// Fixed ordering cost K(q) with n = ceil(q / Q) batches.
double batch_order_cost(double order_units, const EnvParams& params);
int batches_for(double order_units, const EnvParams& params);

/// Z = 1 - U(0,1) * yield_max.
double draw_yield(Rng& rng, double yield_max);

/// Material flows of one period, without cost accounting.
struct PeriodFlows {
  double incoming = 0.0;  // pre-yield units due this period
  double arrived = 0.0;
  double sales = 0.0;
  double lost = 0.0;
  double expired = 0.0;
  double carried = 0.0;  // (Y_t - D_t)^+, includes the units about to expire
};

/// Unchecked core of a period transition on a raw bucket vector of length
/// lifetime + lead_time - 1. Shared by the environment and by forward
/// simulations that run many times per decision.
PeriodFlows advance_buckets(std::span<double> buckets, int lifetime, int lead_time,
                            double order_units, double demand, double yield) noexcept;

/// Runs one period in place: arrival (bucket m scaled by `yield`), order
/// placement, FIFO demand satisfaction, expiry of lifetime-1 leftovers, and
/// the shift of every bucket one slot down with the new order at the end.
/// Throws std::invalid_argument on a malformed state, negative demand, an
/// order that is not a whole number of batches, or an order placed after
/// t = T - L.
PeriodOutcome apply_period(InventoryState& state, const EnvParams& params,
                           const CostRates& rates, double order_units, double demand,
                           double yield);

struct StepResult {
  InventoryState state;
  PeriodOutcome outcome;
};

StepResult step(const InventoryState& state, const EnvParams& params, const CostRates& rates,
                double order_units, double demand, double yield);

struct EpisodeLedger {
  std::vector<PeriodOutcome> periods;
  CostBreakdown raw;          // sums of per-period raw components
  CostBreakdown transformed;  // sums of per-period transformed components
  double raw_total = 0.0;     // includes the terminal salvage credit
  double transformed_total = 0.0;
  // period totals summed in period order, so that a client adding up
  // per-step rewards gets exactly transformed_total
  double raw_running = 0.0;
  double transformed_running = 0.0;
  double salvage = 0.0;
  double terminal_on_hand = 0.0;
  double demand_after_lead = 0.0;  // sum of D_t for t = L+1..T
  bool finalized = false;

  void record(const PeriodOutcome& outcome, int lead_time);
};

/// Closes the books once t = T + 1: credits ĉ per unit left on hand to the
/// raw total. Throws std::logic_error before the horizon end.
void finalize_episode(const InventoryState& state, const EnvParams& params,
                      const CostRates& rates, EpisodeLedger& ledger);

}  // namespace perishable
