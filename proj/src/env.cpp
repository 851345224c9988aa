#include "perishable/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace perishable {

namespace {

constexpr double kBatchTolerance = 1e-9;

}  // namespace

void EnvParams::validate() const {
  if (horizon < 1) throw std::invalid_argument("env.horizon must be >= 1");
  if (lead_time < 0) throw std::invalid_argument("env.lead_time must be >= 0");
  if (horizon <= lead_time) throw std::invalid_argument("env.horizon must exceed env.lead_time");
  if (lifetime < 1) throw std::invalid_argument("env.lifetime must be >= 1");
  if (!(batch_size > 0.0) || !std::isfinite(batch_size))
    throw std::invalid_argument("env.batch_size must be positive");
  if (max_batches && *max_batches < 0) throw std::invalid_argument("env.max_batches must be >= 0");
  if (!(yield_max >= 0.0 && yield_max < 1.0))
    throw std::invalid_argument("env.yield_max must lie in [0, 1)");
  if (batch_costs.empty() || batch_costs.front() != 0.0)
    throw std::invalid_argument("env.batch_costs must start with K(0) = 0");
  for (std::size_t i = 1; i < batch_costs.size(); ++i) {
    if (batch_costs[i] < batch_costs[i - 1])
      throw std::invalid_argument("env.batch_costs must be non-decreasing");
  }
}

TransformedCosts transform_costs(const RawCosts& raw) {
  if (raw.lost_sales < raw.unit) {
    throw std::invalid_argument("lost-sales cost must be at least the unit ordering cost");
  }
  return {raw.holding, raw.lost_sales - raw.unit, raw.expiration + raw.unit};
}

double InventoryState::on_hand(const EnvParams& params) const {
  const auto n = static_cast<std::size_t>(std::max(params.lifetime - 1, 0));
  return std::accumulate(buckets.begin(), buckets.begin() + std::min(n, buckets.size()), 0.0);
}

double InventoryState::position() const {
  return std::accumulate(buckets.begin(), buckets.end(), 0.0);
}

CostBreakdown& CostBreakdown::operator+=(const CostBreakdown& o) {
  ordering_fixed += o.ordering_fixed;
  ordering_unit += o.ordering_unit;
  holding += o.holding;
  lost_sales += o.lost_sales;
  expiration += o.expiration;
  yield_loss += o.yield_loss;
  return *this;
}

int batches_for(double order_units, const EnvParams& params) {
  if (!(order_units >= 0.0)) throw std::invalid_argument("order quantity must be >= 0");
  const double n = std::ceil(order_units / params.batch_size - kBatchTolerance);
  return static_cast<int>(std::max(n, 0.0));
}

double batch_order_cost(double order_units, const EnvParams& params) {
  const int n = batches_for(order_units, params);
  if (params.max_batches && n > *params.max_batches) {
    throw std::invalid_argument("order of " + std::to_string(order_units) +
                                " units exceeds the batch limit");
  }
  const auto idx = std::min(static_cast<std::size_t>(n), params.batch_costs.size() - 1);
  return params.batch_costs[idx];
}

double draw_yield(Rng& rng, double yield_max) {
  if (yield_max == 0.0) return 1.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return 1.0 - unit(rng) * yield_max;
}

PeriodFlows advance_buckets(std::span<double> b, int lifetime, int lead_time,
                            double order_units, double demand, double yield) noexcept {
  const auto on_hand_slots = static_cast<std::size_t>(lifetime - 1);
  PeriodFlows f;

  // arrival
  f.incoming = lead_time >= 1 ? b[on_hand_slots] : order_units;
  double fresh = f.incoming * yield;
  f.arrived = fresh;
  double available = fresh;
  for (std::size_t i = 0; i < on_hand_slots; ++i) available += b[i];

  // FIFO issuing, oldest first, the fresh arrival last
  double remaining = demand;
  for (std::size_t i = 0; i < on_hand_slots && remaining > 0.0; ++i) {
    const double take = std::min(b[i], remaining);
    b[i] -= take;
    remaining -= take;
  }
  if (remaining > 0.0) {
    const double take = std::min(fresh, remaining);
    fresh -= take;
    remaining -= take;
  }
  f.lost = remaining;
  f.sales = demand - remaining;
  f.carried = std::max(available - f.sales, 0.0);

  // leftovers with one period of life expire
  f.expired = lifetime == 1 ? fresh : b[0];

  // shift every bucket one slot down; the new order enters at the tail
  if (lead_time >= 1) {
    b[on_hand_slots] = fresh;
    std::shift_left(b.begin(), b.end(), 1);
    b.back() = order_units;
  } else if (!b.empty()) {
    std::shift_left(b.begin(), b.end(), 1);
    b.back() = fresh;
  }
  return f;
}

PeriodOutcome apply_period(InventoryState& state, const EnvParams& params,
                           const CostRates& rates, double order_units, double demand,
                           double yield) {
  auto& b = state.buckets;
  if (b.size() != params.state_size()) throw std::invalid_argument("inventory vector has wrong length");
  for (double x : b) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("inventory buckets must be finite and >= 0");
  }
  if (!(demand >= 0.0) || !std::isfinite(demand)) throw std::invalid_argument("demand must be finite and >= 0");
  if (!(yield >= 0.0 && yield <= 1.0)) throw std::invalid_argument("yield must lie in [0, 1]");
  if (!(order_units >= 0.0) || !std::isfinite(order_units))
    throw std::invalid_argument("order quantity must be finite and >= 0");

  const int n_batches = static_cast<int>(std::llround(order_units / params.batch_size));
  if (std::abs(order_units - n_batches * params.batch_size) >
      kBatchTolerance * std::max(1.0, order_units)) {
    throw std::invalid_argument("order quantity is not a whole number of batches");
  }
  if (params.max_batches && n_batches > *params.max_batches)
    throw std::invalid_argument("order exceeds the batch limit");
  if (n_batches > 0 && !params.ordering_allowed(state.t))
    throw std::invalid_argument("orders placed after T - L can never arrive");

  PeriodOutcome out;
  out.t = state.t;
  out.yield = yield;
  out.order_units = order_units;
  out.order_batches = n_batches;
  out.demand = demand;

  const PeriodFlows flows =
      advance_buckets(b, params.lifetime, params.lead_time, order_units, demand, yield);
  ++state.t;
  out.arrived = flows.arrived;
  out.sales = flows.sales;
  out.lost_sales = flows.lost;
  out.expired = flows.expired;
  out.end_on_hand = std::max(flows.carried - flows.expired, 0.0);
  const double carried = flows.carried;
  const double incoming = flows.incoming;
  const int L = params.lead_time;

  const bool warm_up = out.t <= L;  // nothing ordered can have arrived yet
  const double fixed = batch_order_cost(order_units, params);
  const auto& r = rates.raw;
  const auto& tr = rates.transformed;

  out.raw.ordering_fixed = fixed;
  out.raw.ordering_unit = r.unit * order_units;
  out.raw.holding = r.holding * carried;
  out.raw.lost_sales = warm_up ? 0.0 : r.lost_sales * out.lost_sales;
  out.raw.expiration = r.expiration * out.expired;

  out.transformed.ordering_fixed = fixed;
  out.transformed.holding = tr.holding * carried;
  out.transformed.lost_sales = warm_up ? 0.0 : tr.lost_sales * out.lost_sales;
  out.transformed.expiration = tr.expiration * out.expired;
  out.transformed.yield_loss = r.unit * (incoming - out.arrived);
  return out;
}

StepResult step(const InventoryState& state, const EnvParams& params, const CostRates& rates,
                double order_units, double demand, double yield) {
  StepResult result{state, {}};
  result.outcome = apply_period(result.state, params, rates, order_units, demand, yield);
  return result;
}

void EpisodeLedger::record(const PeriodOutcome& outcome, int lead_time) {
  periods.push_back(outcome);
  raw += outcome.raw;
  transformed += outcome.transformed;
  raw_running += outcome.raw.total();
  transformed_running += outcome.transformed.total();
  if (outcome.t > lead_time) demand_after_lead += outcome.demand;
}

void finalize_episode(const InventoryState& state, const EnvParams& params,
                      const CostRates& rates, EpisodeLedger& ledger) {
  if (state.t != params.horizon + 1) {
    throw std::logic_error("finalize_episode called before the horizon end");
  }
  ledger.terminal_on_hand = state.position();
  ledger.salvage = rates.raw.unit * ledger.terminal_on_hand;
  ledger.raw_total = ledger.raw_running - ledger.salvage;
  ledger.transformed_total = ledger.transformed_running;
  ledger.finalized = true;
}

}  // namespace perishable
