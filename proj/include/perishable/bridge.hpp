#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perishable/evaluator.hpp"

namespace perishable {

struct BridgeOptions {
  bool normalize = false;         // divide unit-valued features by the peak forecast
  bool projection_mean_yield = true;  // false: assume full yield in the projection
};

/// E[x_{t+L}] restricted to the m on-hand categories: the state rolled L
/// periods forward with no new orders, demand equal to its forecast and the
/// yield at `yield`. The last entry is the order placed now, which the roll
/// leaves at zero.
std::vector<double> project_inventory(const InventoryState& state, const DemandScenario& scenario,
                                      const EnvParams& params, double yield);

/// Largest batch count the agent may choose. With no batch limit it is
/// ceil((max_t d_t + max of the OUT and PIL upper-bound optima) / Q).
int action_cap(const Problem& problem);

/// Seed of the episode a bridge reset(seed) plays. run_episode with this
/// seed and the same actions reproduces the bridge costs.
std::uint64_t bridge_episode_seed(std::uint64_t reset_seed);

struct BridgeStep {
  std::vector<double> obs;
  double reward = 0.0;
  bool done = false;
  PeriodOutcome outcome;
  bool forced_zero = false;
  int action = 0;
};

class BridgeEnv {
 public:
  BridgeEnv(Problem problem, BridgeOptions options = {});

  int obs_dim() const;
  int action_count() const { return cap_ + 1; }
  const Problem& problem() const { return problem_; }
  const BridgeOptions& options() const { return options_; }

  std::vector<double> reset(std::uint64_t seed);
  /// Throws InputError on an out-of-range action, a step before reset or
  /// after the episode ended.
  BridgeStep step(int action);
  std::vector<double> observation() const;

  bool active() const { return active_; }
  bool done() const { return done_; }
  int period() const { return state_.t; }
  const EpisodeLedger& ledger() const { return ledger_; }

 private:
  Problem problem_;
  BridgeOptions options_;
  int cap_ = 0;
  InventoryState state_;
  std::optional<EpisodeNoise> noise_;
  EpisodeLedger ledger_;
  bool active_ = false;
  bool done_ = false;
};

/// One client connection speaking newline-delimited JSON.
class ProtocolSession {
 public:
  explicit ProtocolSession(BridgeEnv env) : env_(std::move(env)) {}

  nlohmann::json handle(const nlohmann::json& request);
  /// Parses one line; malformed input yields an error object.
  std::string handle_line(const std::string& line);
  bool closed() const { return closed_; }

 private:
  BridgeEnv env_;
  bool closed_ = false;
};

nlohmann::json spec_message(const BridgeEnv& env);
nlohmann::json step_message(const BridgeStep& step);

/// Serves one session until close or end of input.
void serve_stream(BridgeEnv env, std::istream& in, std::ostream& out);
/// Accepts connections on 127.0.0.1:port, one thread and session each.
/// Returns only on a socket error.
void serve_tcp(const Problem& problem, const BridgeOptions& options, int port);

}  // namespace perishable
