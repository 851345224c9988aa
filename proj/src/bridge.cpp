#include "perishable/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "perishable/errors.hpp"

namespace perishable {

using nlohmann::json;

std::vector<double> project_inventory(const InventoryState& state, const DemandScenario& scenario,
                                      const EnvParams& params, double yield) {
  std::vector<double> work = state.buckets;
  for (int j = state.t; j < state.t + params.lead_time; ++j) {
    advance_buckets(work, params.lifetime, params.lead_time, 0.0, scenario.forecast_at(j), yield);
  }
  std::vector<double> out(static_cast<std::size_t>(params.lifetime), 0.0);
  const auto n = std::min(out.size(), work.size());
  std::copy_n(work.begin(), n, out.begin());
  if (params.lead_time >= 1) out.back() = 0.0;
  return out;
}

int action_cap(const Problem& problem) {
  const auto& params = problem.params;
  if (params.max_batches) return *params.max_batches;
  const auto ctx = bound_context(problem);
  const auto& d = problem.scenario.forecast();
  const double peak = d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
  const double s = std::max({out_ub_argmin(ctx), pil_ub_argmin(ctx), 0.0});
  return std::max(1, static_cast<int>(std::ceil((peak + s) / params.batch_size - 1e-9)));
}

std::uint64_t bridge_episode_seed(std::uint64_t reset_seed) {
  EvalConfig config;
  config.master_seed = reset_seed;
  return episode_seed(config, 0, 0);
}

BridgeEnv::BridgeEnv(Problem problem, BridgeOptions options)
    : problem_(std::move(problem)), options_(options) {
  problem_.validate();
  cap_ = action_cap(problem_);
  state_ = InventoryState::empty(problem_.params);
}

int BridgeEnv::obs_dim() const { return problem_.params.lifetime + problem_.params.lead_time + 2; }

std::vector<double> BridgeEnv::observation() const {
  const auto& params = problem_.params;
  const double yield = options_.projection_mean_yield ? params.mean_yield() : 1.0;
  std::vector<double> obs = project_inventory(state_, problem_.scenario, params, yield);
  for (int j = state_.t; j <= state_.t + params.lead_time; ++j) obs.push_back(problem_.scenario.forecast_at(j));
  if (options_.normalize) {
    const double peak = problem_.scenario.peak();
    if (peak > 0.0) {
      for (double& x : obs) x /= peak;
    }
  }
  obs.push_back(static_cast<double>(state_.t) / params.horizon);
  return obs;
}

std::vector<double> BridgeEnv::reset(std::uint64_t seed) {
  state_ = InventoryState::empty(problem_.params);
  noise_.emplace(bridge_episode_seed(seed));
  ledger_ = EpisodeLedger{};
  active_ = true;
  done_ = false;
  return observation();
}

BridgeStep BridgeEnv::step(int action) {
  if (!active_) throw InputError("step before reset");
  if (done_) throw InputError("episode is done; reset first");
  if (action < 0 || action > cap_) throw InputError("action out of range");
  const auto& params = problem_.params;

  BridgeStep r;
  r.action = action;
  int n = action;
  if (!params.ordering_allowed(state_.t)) {
    r.forced_zero = n != 0;
    n = 0;
  }
  const double demand = noise_->demand(problem_.scenario, state_.t);
  const double z = noise_->yield(params.yield_max);
  r.outcome = apply_period(state_, params, problem_.rates, n * params.batch_size, demand, z);
  ledger_.record(r.outcome, params.lead_time);
  r.reward = -r.outcome.transformed.total();
  if (state_.t > params.horizon) {
    finalize_episode(state_, params, problem_.rates, ledger_);
    done_ = true;
  }
  r.done = done_;
  r.obs = observation();
  return r;
}

json spec_message(const BridgeEnv& env) {
  return {{"obs_dim", env.obs_dim()},
          {"action_count", env.action_count()},
          {"horizon", env.problem().params.horizon},
          {"normalized", env.options().normalize}};
}

json step_message(const BridgeStep& step) {
  const auto& o = step.outcome;
  const auto& c = o.transformed;
  json info = {{"t", o.t},
               {"action", step.action},
               {"forced_zero", step.forced_zero},
               {"batches", o.order_batches},
               {"order_units", o.order_units},
               {"arrived", o.arrived},
               {"demand", o.demand},
               {"sales", o.sales},
               {"lost_sales", o.lost_sales},
               {"expired", o.expired},
               {"cost", {{"fixed_order", c.ordering_fixed},
                         {"holding", c.holding},
                         {"lost_sales", c.lost_sales},
                         {"expiration", c.expiration},
                         {"yield_loss", c.yield_loss}}}};
  return {{"obs", step.obs}, {"reward", step.reward}, {"done", step.done}, {"info", info}};
}

json ProtocolSession::handle(const json& request) {
  try {
    if (!request.is_object()) throw InputError("request must be a JSON object");
    const auto cmd_it = request.find("cmd");
    if (cmd_it == request.end() || !cmd_it->is_string()) throw InputError("missing string field 'cmd'");
    const auto cmd = cmd_it->get<std::string>();
    if (cmd == "spec") return spec_message(env_);
    if (cmd == "reset") {
      const auto seed = request.find("seed");
      if (seed == request.end() || !seed->is_number_integer()) throw InputError("reset needs an integer 'seed'");
      const auto obs = env_.reset(seed->get<std::uint64_t>());
      return {{"obs", obs}, {"t", env_.period()}};
    }
    if (cmd == "step") {
      const auto action = request.find("action");
      if (action == request.end() || !action->is_number_integer()) throw InputError("step needs an integer 'action'");
      return step_message(env_.step(action->get<int>()));
    }
    if (cmd == "close") {
      closed_ = true;
      return {{"closed", true}};
    }
    throw InputError("unknown cmd '" + cmd + "'");
  } catch (const InputError& e) {
    return {{"error", e.what()}};
  } catch (const json::exception& e) {
    return {{"error", e.what()}};
  }
}

std::string ProtocolSession::handle_line(const std::string& line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error&) {
    return json{{"error", "malformed message"}}.dump();
  }
  return handle(request).dump();
}

void serve_stream(BridgeEnv env, std::istream& in, std::ostream& out) {
  ProtocolSession session(std::move(env));
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    out << session.handle_line(line) << '\n' << std::flush;
  }
}

namespace {

void serve_fd(int fd, BridgeEnv env) {
  ProtocolSession session(std::move(env));
  std::string buffer;
  char chunk[4096];
  while (!session.closed()) {
    const auto got = ::recv(fd, chunk, sizeof chunk, 0);
    if (got <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(got));
    std::size_t pos;
    while (!session.closed() && (pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const std::string reply = session.handle_line(line) + "\n";
      std::size_t sent = 0;
      while (sent < reply.size()) {
        const auto n = ::send(fd, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
          ::close(fd);
          return;
        }
        sent += static_cast<std::size_t>(n);
      }
    }
  }
  ::close(fd);
}

}  // namespace

void serve_tcp(const Problem& problem, const BridgeOptions& options, int port) {
  const BridgeEnv prototype(problem, options);
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listener, 16) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(listener);
    throw std::runtime_error("cannot listen on port " + std::to_string(port) + ": " + msg);
  }
  for (;;) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      const std::string msg = std::strerror(errno);
      ::close(listener);
      throw std::runtime_error("accept: " + msg);
    }
    std::thread(serve_fd, fd, prototype).detach();
  }
}

}  // namespace perishable
