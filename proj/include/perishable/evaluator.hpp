#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perishable/bounds.hpp"
#include "perishable/demand.hpp"
#include "perishable/env.hpp"
#include "perishable/policies.hpp"

namespace perishable {

/// Everything needed to run an episode except the policy.
struct Problem {
  EnvParams params;
  CostRates rates;
  DemandScenario scenario;

  void validate() const;
};

struct EvalConfig {
  int n_episodes = 2000;
  std::uint64_t master_seed = 0;
  /// Common random numbers: every candidate sees episode seeds derived from
  /// the master seed alone. Without it each evaluation also mixes in its
  /// `stream` tag.
  bool crn = true;
  int parallel = 1;

  void validate() const;
};

std::uint64_t episode_seed(const EvalConfig& config, std::uint64_t stream, int episode);

/// Demand and yield streams below one episode seed. The bridge draws from
/// the same streams so that a replayed action trace reproduces its costs.
struct EpisodeNoise {
  explicit EpisodeNoise(std::uint64_t seed);
  double demand(const DemandScenario& scenario, int t);
  double yield(double yield_max);

 private:
  Rng demand_rng_;
  Rng yield_rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// One T-period episode from the empty state. `policy` must already be
/// prepared (see prepare_policy).
EpisodeLedger run_episode(const Problem& problem, const PolicySpec& policy, std::uint64_t seed);

/// Fraction of demand met over periods t > L; 1 when nothing was demanded.
double service_level(const EpisodeLedger& ledger, int lead_time);

struct EpisodeSummary {
  double cost = 0.0;  // transformed total
  double raw_cost = 0.0;
  CostBreakdown breakdown;
  double demand = 0.0;
  double sales = 0.0;
};

struct EvalResult {
  int n_episodes = 0;
  double mean = 0.0;
  double std = 0.0;  // sample std, 0 for a single episode
  double se = 0.0;
  double raw_mean = 0.0;
  CostBreakdown breakdown;  // mean transformed components
  double service_level = 0.0;  // pooled over all episodes, periods t > L
  std::vector<EpisodeSummary> episodes;
};

EvalResult evaluate(const Problem& problem, const PolicySpec& policy, const EvalConfig& config,
                    std::uint64_t stream = 0);

/// Same policy kind with its scalar parameter replaced (s for OUT, u for PIL,
/// k2 for BMS).
PolicySpec with_parameter(const PolicySpec& base, double value);

struct SearchResult {
  SearchInterval interval;
  std::vector<int> candidates;
  std::vector<EvalResult> results;
  std::size_t best_index = 0;
  int chosen = 0;

  const EvalResult& best() const { return results.at(best_index); }
};

struct SearchOptions {
  /// Keep stepping outward while the best candidate lies within `lookahead`
  /// of an end of the interval. Meant for configurations outside the bounds'
  /// assumptions, where the bounds interval may miss the optimum.
  bool extend_at_edges = false;
  int lookahead = 5;
  int max_extension = 200;
};

/// Evaluates every integer candidate of the interval and keeps the smallest
/// minimizer of the mean cost. Throws std::invalid_argument on an empty
/// interval.
SearchResult optimize_parameter(const Problem& problem, const PolicySpec& base,
                                SearchInterval interval, const EvalConfig& config,
                                const SearchOptions& options = {});

struct GapRow {
  std::string name;
  double mean = 0.0;
  double se = 0.0;
  double gap = 0.0;  // (C - C_ref) / C_ref * 100
};

double percentage_gap(double cost, double reference);

/// Evaluates each policy under the same episode seeds and reports the gap of
/// each against policies[reference].
std::vector<GapRow> compare(const Problem& problem, const std::vector<PolicySpec>& policies,
                            std::size_t reference, const EvalConfig& config);

BoundContext bound_context(const Problem& problem);
/// True when the bounds' assumptions hold: no fixed ordering cost, no yield
/// loss and a constant noise level.
bool bounds_conforming(const Problem& problem);

}  // namespace perishable
