#include "perishable/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "perishable/errors.hpp"

namespace perishable {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path.empty() ? "config" : path, "expected an object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) fail(join(path, k), "unknown field");
  }
}

double read_double(const json& obj, const char* key, const std::string& path, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(join(path, key), "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) fail(join(path, key), "must be finite");
  return x;
}

int read_int(const json& obj, const char* key, const std::string& path, int fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(join(path, key), "expected an integer");
  return v->get<int>();
}

bool read_bool(const json& obj, const char* key, const std::string& path, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::string read_string(const json& obj, const char* key, const std::string& path, std::string fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(join(path, key), "expected a string");
  return v->get<std::string>();
}

template <class T>
std::vector<T> read_array(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return {};
  const std::string p = join(path, key);
  if (!v->is_array()) fail(p, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const json& e = (*v)[i];
    const std::string ep = fmt::format("{}[{}]", p, i);
    if constexpr (std::is_same_v<T, int>) {
      if (!e.is_number_integer()) fail(ep, "expected an integer");
    } else {
      if (!e.is_number()) fail(ep, "expected a number");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

template <class Fn>
void check(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

EnvParams parse_env(const json& j) {
  const std::string p = "env";
  expect_object(j, p, {"horizon", "lead_time", "lifetime", "batch_size", "max_batches", "yield_max", "batch_costs"});
  EnvParams e;
  e.horizon = read_int(j, "horizon", p, e.horizon);
  e.lead_time = read_int(j, "lead_time", p, e.lead_time);
  e.lifetime = read_int(j, "lifetime", p, e.lifetime);
  e.batch_size = read_double(j, "batch_size", p, e.batch_size);
  if (const json* v = find(j, "max_batches"); v && !v->is_null()) e.max_batches = read_int(j, "max_batches", p, 0);
  e.yield_max = read_double(j, "yield_max", p, e.yield_max);
  if (find(j, "batch_costs")) e.batch_costs = read_array<double>(j, "batch_costs", p);
  check(p, [&] { e.validate(); });
  return e;
}

RawCosts parse_costs(const json& j) {
  const std::string p = "costs";
  expect_object(j, p, {"unit", "holding", "lost_sales", "expiration"});
  RawCosts c;
  c.unit = read_double(j, "unit", p, c.unit);
  c.holding = read_double(j, "holding", p, c.holding);
  c.lost_sales = read_double(j, "lost_sales", p, c.lost_sales);
  c.expiration = read_double(j, "expiration", p, c.expiration);
  if (c.unit < 0 || c.holding < 0 || c.expiration < 0) fail(p, "cost rates must be >= 0");
  check(p, [&] { transform_costs(c); });
  return c;
}

NoiseKind parse_noise_kind(const std::string& name, const std::string& path) {
  try {
    return noise_kind_from_string(name);
  } catch (const std::exception&) {
    fail(path, "unknown noise kind '" + name + "' (worst_case, balanced, custom)");
  }
}

DemandConfig parse_demand(const json& j) {
  const std::string p = "demand";
  expect_object(j, p, {"forecast_file", "forecast", "lifecycle", "constant", "noise"});
  DemandConfig d;
  d.forecast_file = read_string(j, "forecast_file", p, "");
  d.forecast = read_array<double>(j, "forecast", p);
  if (const json* v = find(j, "lifecycle")) {
    const std::string lp = "demand.lifecycle";
    expect_object(*v, lp, {"peak", "growth", "maturity", "decline", "growth_shape"});
    LifecycleConfig lc;
    lc.peak = read_double(*v, "peak", lp, lc.peak);
    lc.growth = read_double(*v, "growth", lp, lc.growth);
    lc.maturity = read_double(*v, "maturity", lp, lc.maturity);
    lc.decline = read_double(*v, "decline", lp, lc.decline);
    lc.growth_shape = read_double(*v, "growth_shape", lp, lc.growth_shape);
    d.lifecycle = lc;
  }
  if (find(j, "constant")) d.constant = read_double(j, "constant", p, 0.0);
  const int sources = !d.forecast_file.empty() + !d.forecast.empty() + d.lifecycle.has_value() + d.constant.has_value();
  if (sources != 1) fail(p, "give exactly one of forecast_file, forecast, lifecycle, constant");
  for (std::size_t i = 0; i < d.forecast.size(); ++i) {
    if (!(d.forecast[i] >= 0.0)) fail(fmt::format("demand.forecast[{}]", i), "must be >= 0");
  }
  if (d.constant && *d.constant < 0.0) fail("demand.constant", "must be >= 0");

  if (const json* v = find(j, "noise")) {
    const std::string np = "demand.noise";
    expect_object(*v, np, {"kind", "level", "sigma", "truncate_at_zero", "integer"});
    d.noise.kind = parse_noise_kind(read_string(*v, "kind", np, "worst_case"), np + ".kind");
    d.noise.level = read_double(*v, "level", np, d.noise.level);
    d.noise.custom_sigma = read_array<double>(*v, "sigma", np);
    d.noise.truncate_at_zero = read_bool(*v, "truncate_at_zero", np, true);
    d.noise.integer_demand = read_bool(*v, "integer", np, false);
    if (d.noise.level < 0.0) fail(np + ".level", "must be >= 0");
    if (d.noise.kind == NoiseKind::custom && d.noise.custom_sigma.empty()) fail(np + ".sigma", "required for custom noise");
  }
  return d;
}

PolicyConfig parse_policy(const json& j, const std::string& p, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail(p, "expected an object");
  const std::string kind = read_string(j, "kind", p, "");
  PolicyConfig pc;
  pc.name = read_string(j, "name", p, kind);
  pc.optimize = read_bool(j, "optimize", p, false);
  if (pc.name.empty() || pc.name.find_first_of(",\"\n ") != std::string::npos)
    fail(join(p, "name"), "must be non-empty without commas, quotes or spaces");
  if (kind == "out") {
    expect_object(j, p, {"kind", "name", "optimize", "s"});
    pc.spec = OutPolicy{read_double(j, "s", p, 0.0)};
  } else if (kind == "pil") {
    expect_object(j, p, {"kind", "name", "optimize", "u", "n_paths"});
    PilPolicy pil;
    pil.u = read_double(j, "u", p, 0.0);
    pil.n_paths = read_int(j, "n_paths", p, pil.n_paths);
    if (pil.n_paths < 1) fail(join(p, "n_paths"), "must be >= 1");
    pc.spec = pil;
  } else if (kind == "bms") {
    expect_object(j, p, {"kind", "name", "optimize", "k1", "k2", "mse_window", "mode", "mse_source", "plan"});
    BmsPolicy b;
    b.k1 = read_double(j, "k1", p, b.k1);
    b.k2 = read_double(j, "k2", p, b.k2);
    b.mse_window = read_int(j, "mse_window", p, b.mse_window);
    if (b.k1 < 0.0) fail(join(p, "k1"), "must be >= 0");
    if (b.mse_window < 1) fail(join(p, "mse_window"), "must be >= 1");
    const auto mode = read_string(j, "mode", p, "static_replay");
    if (mode == "static_replay") b.mode = BmsMode::static_replay;
    else if (mode == "formula") b.mode = BmsMode::formula;
    else fail(join(p, "mode"), "expected static_replay or formula");
    const auto source = read_string(j, "mse_source", p, "realized");
    if (source == "realized") b.mse_source = MseSource::realized;
    else if (source == "planned") b.mse_source = MseSource::planned;
    else fail(join(p, "mse_source"), "expected realized or planned");
    b.plan = read_array<int>(j, "plan", p);
    pc.spec = b;
  } else if (kind == "replay") {
    expect_object(j, p, {"kind", "name", "optimize", "actions", "actions_file"});
    ReplayPolicy r;
    r.actions = read_array<int>(j, "actions", p);
    pc.actions_file = read_string(j, "actions_file", p, "");
    if (r.actions.empty() == pc.actions_file.empty()) fail(p, "replay needs exactly one of actions, actions_file");
    if (!pc.actions_file.empty()) r.actions = load_actions(base_dir / pc.actions_file);
    pc.spec = r;
  } else if (kind == "random") {
    expect_object(j, p, {"kind", "name", "optimize", "max_batches"});
    RandomPolicy r;
    r.max_batches = read_int(j, "max_batches", p, r.max_batches);
    if (r.max_batches < 0) fail(join(p, "max_batches"), "must be >= 0");
    pc.spec = r;
  } else {
    fail(join(p, "kind"), "unknown policy kind '" + kind + "' (out, pil, bms, replay, random)");
  }
  if (pc.optimize && !std::holds_alternative<OutPolicy>(pc.spec) && !std::holds_alternative<PilPolicy>(pc.spec))
    fail(join(p, "optimize"), "only out and pil policies can be optimized");
  return pc;
}

GridConfig parse_grid(const json& j) {
  const std::string p = "grid";
  expect_object(j, p, {"lead_time", "lifetime", "expiration", "lost_sales", "yield_max", "noise"});
  GridConfig g;
  g.lead_time = read_array<int>(j, "lead_time", p);
  g.lifetime = read_array<int>(j, "lifetime", p);
  g.expiration = read_array<double>(j, "expiration", p);
  g.lost_sales = read_array<double>(j, "lost_sales", p);
  g.yield_max = read_array<double>(j, "yield_max", p);
  if (const json* v = find(j, "noise")) {
    if (!v->is_array()) fail("grid.noise", "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto ep = fmt::format("grid.noise[{}]", i);
      if (!(*v)[i].is_string()) fail(ep, "expected a string");
      g.noise.push_back(parse_noise_kind((*v)[i].get<std::string>(), ep));
    }
  }
  return g;
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  expect_object(j, "", {"env", "costs", "demand", "policies", "eval", "grid", "bridge"});
  RunConfig c;
  c.base_dir = base_dir;
  if (const json* v = find(j, "env")) c.env = parse_env(*v);
  if (const json* v = find(j, "costs")) c.costs = parse_costs(*v);
  const json* demand = find(j, "demand");
  if (!demand) fail("demand", "missing section");
  c.demand = parse_demand(*demand);
  if (const json* v = find(j, "policies")) {
    if (!v->is_array()) fail("policies", "expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto p = fmt::format("policies[{}]", i);
      c.policies.push_back(parse_policy((*v)[i], p, base_dir));
      if (!names.insert(c.policies.back().name).second) fail(join(p, "name"), "duplicate policy name");
    }
  }
  if (const json* v = find(j, "eval")) {
    const std::string p = "eval";
    expect_object(*v, p, {"episodes", "seed", "crn", "parallel", "margin", "reference"});
    c.eval.n_episodes = read_int(*v, "episodes", p, c.eval.n_episodes);
    if (const json* s = find(*v, "seed")) {
      if (!s->is_number_integer() || (!s->is_number_unsigned() && s->get<std::int64_t>() < 0))
        fail("eval.seed", "expected a non-negative integer");
      c.eval.master_seed = s->get<std::uint64_t>();
    }
    c.eval.crn = read_bool(*v, "crn", p, true);
    c.eval.parallel = read_int(*v, "parallel", p, 1);
    c.margin = read_int(*v, "margin", p, c.margin);
    c.reference = read_string(*v, "reference", p, "");
    check(p, [&] { c.eval.validate(); });
    if (c.margin < 0) fail("eval.margin", "must be >= 0");
  }
  if (!c.reference.empty()) {
    bool found = false;
    for (const auto& pc : c.policies) found = found || pc.name == c.reference;
    if (!found) fail("eval.reference", "no policy named '" + c.reference + "'");
  }
  if (const json* v = find(j, "grid")) c.grid = parse_grid(*v);
  if (const json* v = find(j, "bridge")) {
    expect_object(*v, "bridge", {"normalize"});
    c.normalize_observations = read_bool(*v, "normalize", "bridge", false);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  try {
    return parse_config(j, path.parent_path());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["env"] = {{"horizon", c.env.horizon},
              {"lead_time", c.env.lead_time},
              {"lifetime", c.env.lifetime},
              {"batch_size", c.env.batch_size},
              {"max_batches", c.env.max_batches ? json(*c.env.max_batches) : json(nullptr)},
              {"yield_max", c.env.yield_max},
              {"batch_costs", c.env.batch_costs}};
  j["costs"] = {{"unit", c.costs.unit},
                {"holding", c.costs.holding},
                {"lost_sales", c.costs.lost_sales},
                {"expiration", c.costs.expiration}};
  json demand = json::object();
  if (!c.demand.forecast_file.empty()) demand["forecast_file"] = c.demand.forecast_file;
  if (!c.demand.forecast.empty()) demand["forecast"] = c.demand.forecast;
  if (c.demand.lifecycle) {
    const auto& lc = *c.demand.lifecycle;
    demand["lifecycle"] = {{"peak", lc.peak}, {"growth", lc.growth}, {"maturity", lc.maturity},
                           {"decline", lc.decline}, {"growth_shape", lc.growth_shape}};
  }
  if (c.demand.constant) demand["constant"] = *c.demand.constant;
  const auto& n = c.demand.noise;
  demand["noise"] = {{"kind", to_string(n.kind)},
                     {"level", n.level},
                     {"truncate_at_zero", n.truncate_at_zero},
                     {"integer", n.integer_demand}};
  if (!n.custom_sigma.empty()) demand["noise"]["sigma"] = n.custom_sigma;
  j["demand"] = demand;

  json policies = json::array();
  for (const auto& pc : c.policies) {
    json p = {{"kind", policy_name(pc.spec)}, {"name", pc.name}, {"optimize", pc.optimize}};
    if (const auto* o = std::get_if<OutPolicy>(&pc.spec)) {
      p["s"] = o->s;
    } else if (const auto* u = std::get_if<PilPolicy>(&pc.spec)) {
      p["u"] = u->u;
      p["n_paths"] = u->n_paths;
    } else if (const auto* b = std::get_if<BmsPolicy>(&pc.spec)) {
      p["k1"] = b->k1;
      p["k2"] = b->k2;
      p["mse_window"] = b->mse_window;
      p["mode"] = b->mode == BmsMode::formula ? "formula" : "static_replay";
      p["mse_source"] = b->mse_source == MseSource::planned ? "planned" : "realized";
      if (!b->plan.empty()) p["plan"] = b->plan;
    } else if (const auto* r = std::get_if<ReplayPolicy>(&pc.spec)) {
      if (!pc.actions_file.empty()) p["actions_file"] = pc.actions_file;
      else p["actions"] = r->actions;
    } else if (const auto* r = std::get_if<RandomPolicy>(&pc.spec)) {
      p["max_batches"] = r->max_batches;
    }
    policies.push_back(p);
  }
  j["policies"] = policies;
  j["eval"] = {{"episodes", c.eval.n_episodes},
               {"seed", c.eval.master_seed},
               {"crn", c.eval.crn},
               {"parallel", c.eval.parallel},
               {"margin", c.margin},
               {"reference", c.reference}};
  json grid = json::object();
  if (!c.grid.lead_time.empty()) grid["lead_time"] = c.grid.lead_time;
  if (!c.grid.lifetime.empty()) grid["lifetime"] = c.grid.lifetime;
  if (!c.grid.expiration.empty()) grid["expiration"] = c.grid.expiration;
  if (!c.grid.lost_sales.empty()) grid["lost_sales"] = c.grid.lost_sales;
  if (!c.grid.yield_max.empty()) grid["yield_max"] = c.grid.yield_max;
  if (!c.grid.noise.empty()) {
    grid["noise"] = json::array();
    for (auto k : c.grid.noise) grid["noise"].push_back(to_string(k));
  }
  j["grid"] = grid;
  j["bridge"] = {{"normalize", c.normalize_observations}};
  return j;
}

std::vector<double> build_forecast(const RunConfig& c) {
  const int T = c.env.horizon;
  std::vector<double> d;
  if (!c.demand.forecast_file.empty()) {
    d = load_forecast(c.base_dir / c.demand.forecast_file);
  } else if (!c.demand.forecast.empty()) {
    d = c.demand.forecast;
  } else if (c.demand.lifecycle) {
    LifecycleConfig lc = *c.demand.lifecycle;
    lc.horizon = T;
    try {
      d = lifecycle_forecast(lc);
    } catch (const std::invalid_argument& e) {
      fail("demand.lifecycle", e.what());
    }
  } else {
    d.assign(static_cast<std::size_t>(T), c.demand.constant.value_or(0.0));
  }
  if (static_cast<int>(d.size()) != T) {
    fail("demand", fmt::format("forecast has {} periods but env.horizon is {}", d.size(), T));
  }
  return d;
}

Problem build_problem(const RunConfig& c) {
  std::vector<double> d = build_forecast(c);
  const auto& noise = c.demand.noise;
  if (noise.kind == NoiseKind::custom && noise.custom_sigma.size() != d.size()) {
    fail("demand.noise.sigma", fmt::format("needs {} entries, got {}", d.size(), noise.custom_sigma.size()));
  }
  Problem p{c.env, CostRates::from_raw(c.costs), DemandScenario(std::move(d), noise)};
  check("env", [&] { p.validate(); });
  return p;
}

std::vector<int> load_actions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open action trace " + path.string());
  std::vector<int> actions;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == "t,action") continue;
    const auto comma = line.find(',');
    try {
      std::size_t used = 0;
      const std::string head = line.substr(0, comma);
      const long t = std::stol(head, &used);
      if (used != head.size() || comma == std::string::npos) throw std::invalid_argument("row");
      const std::string tail = line.substr(comma + 1);
      const int a = std::stoi(tail, &used);
      if (used != tail.size()) throw std::invalid_argument("row");
      if (t != static_cast<long>(actions.size()) + 1)
        throw InputError(fmt::format("{}:{}: expected period {}", path.string(), line_no, actions.size() + 1));
      if (a < 0) throw InputError(fmt::format("{}:{}: action must be >= 0", path.string(), line_no));
      actions.push_back(a);
    } catch (const std::logic_error&) {
      throw InputError(fmt::format("{}:{}: expected 't,action'", path.string(), line_no));
    }
  }
  if (actions.empty()) throw InputError(path.string() + ": no actions");
  return actions;
}

}  // namespace perishable
