#include "perishable/experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "perishable/errors.hpp"

namespace perishable {

using nlohmann::json;
namespace fs = std::filesystem;

std::string csv_number(double x) { return fmt::format("{}", x); }

std::string Cell::label() const {
  return fmt::format("L={} m={} w={} b={} z={} noise={}", lead_time, lifetime, expiration, lost_sales,
                     yield_max, to_string(noise));
}

std::vector<Cell> expand_grid(const RunConfig& c) {
  const auto& g = c.grid;
  auto or_base = [](auto axis, auto base) { return axis.empty() ? decltype(axis){base} : axis; };
  const auto Ls = or_base(g.lead_time, c.env.lead_time);
  const auto ms = or_base(g.lifetime, c.env.lifetime);
  const auto ws = or_base(g.expiration, c.costs.expiration);
  const auto bs = or_base(g.lost_sales, c.costs.lost_sales);
  const auto zs = or_base(g.yield_max, c.env.yield_max);
  const auto noises = or_base(g.noise, c.demand.noise.kind);

  std::vector<Cell> cells;
  for (auto noise : noises)
    for (int L : Ls)
      for (double w : ws)
        for (int m : ms)
          for (double b : bs)
            for (double z : zs) {
              Cell cell{static_cast<int>(cells.size()), L, m, w, b, z, noise};
              cells.push_back(cell);
            }
  return cells;
}

RunConfig cell_config(const RunConfig& base, const Cell& cell) {
  RunConfig c = base;
  c.env.lead_time = cell.lead_time;
  c.env.lifetime = cell.lifetime;
  c.env.yield_max = cell.yield_max;
  c.costs.expiration = cell.expiration;
  c.costs.lost_sales = cell.lost_sales;
  c.demand.noise.kind = cell.noise;
  c.grid = {};
  return c;
}

CellBounds cell_bounds(const Problem& problem, int margin) {
  const auto ctx = bound_context(problem);
  CellBounds b;
  b.conforming = bounds_conforming(problem);
  b.out_lb_opt = out_lb_argmin(ctx);
  b.out_ub_opt = out_ub_argmin(ctx);
  b.pil_lb_opt = pil_lb_argmin(ctx);
  b.pil_ub_opt = pil_ub_argmin(ctx);
  b.out_interval = search_interval(PolicyKind::out, ctx, margin);
  b.pil_interval = search_interval(PolicyKind::pil, ctx, margin);
  return b;
}

namespace {

std::optional<double> parameter_of(const PolicySpec& spec) {
  if (const auto* o = std::get_if<OutPolicy>(&spec)) return o->s;
  if (const auto* p = std::get_if<PilPolicy>(&spec)) return p->u;
  if (const auto* b = std::get_if<BmsPolicy>(&spec)) return b->k2;
  return std::nullopt;
}

}  // namespace

CellResult run_cell(const RunConfig& base, const Cell& cell) {
  const RunConfig config = cell_config(base, cell);
  const Problem problem = build_problem(config);
  CellResult out;
  out.cell = cell;
  out.bounds = cell_bounds(problem, config.margin);
  const auto ctx = bound_context(problem);

  for (const auto& pc : config.policies) {
    PolicyOutcome po;
    po.name = pc.name;
    po.kind = policy_name(pc.spec);
    if (pc.optimize) {
      const bool is_out = std::holds_alternative<OutPolicy>(pc.spec);
      const auto interval = is_out ? out.bounds.out_interval : out.bounds.pil_interval;
      SearchOptions search_options;
      search_options.extend_at_edges = !out.bounds.conforming;
      auto search = optimize_parameter(problem, pc.spec, interval, config.eval, search_options);
      for (std::size_t i = 0; i < search.candidates.size(); ++i) {
        const double v = search.candidates[i];
        po.curve.push_back({search.candidates[i], search.results[i].mean, search.results[i].se,
                            is_out ? out_lb(v, ctx) : pil_lb(v, ctx), is_out ? out_ub(v, ctx) : pil_ub(v, ctx)});
      }
      po.param = search.chosen;
      po.result = std::move(search.results[search.best_index]);
    } else {
      po.param = parameter_of(pc.spec);
      po.result = evaluate(problem, pc.spec, config.eval);
    }
    out.policies.push_back(std::move(po));
  }
  return out;
}

namespace {

json breakdown_json(const CostBreakdown& b) {
  return {{"fixed_order", b.ordering_fixed}, {"unit_order", b.ordering_unit}, {"holding", b.holding},
          {"lost_sales", b.lost_sales},      {"expiration", b.expiration},    {"yield_loss", b.yield_loss}};
}

CostBreakdown breakdown_from(const json& j) {
  CostBreakdown b;
  b.ordering_fixed = j.at("fixed_order").get<double>();
  b.ordering_unit = j.at("unit_order").get<double>();
  b.holding = j.at("holding").get<double>();
  b.lost_sales = j.at("lost_sales").get<double>();
  b.expiration = j.at("expiration").get<double>();
  b.yield_loss = j.at("yield_loss").get<double>();
  return b;
}

json interval_json(const SearchInterval& iv) { return {iv.lo, iv.hi}; }
SearchInterval interval_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

json to_json(const CellResult& r) {
  const auto& c = r.cell;
  json j;
  j["cell"] = {{"index", c.index},         {"lead_time", c.lead_time},   {"lifetime", c.lifetime},
               {"expiration", c.expiration}, {"lost_sales", c.lost_sales}, {"yield_max", c.yield_max},
               {"noise", to_string(c.noise)}};
  const auto& b = r.bounds;
  j["bounds"] = {{"conforming", b.conforming},
                 {"out_lb_opt", b.out_lb_opt},
                 {"out_ub_opt", b.out_ub_opt},
                 {"pil_lb_opt", b.pil_lb_opt},
                 {"pil_ub_opt", b.pil_ub_opt},
                 {"out_interval", interval_json(b.out_interval)},
                 {"pil_interval", interval_json(b.pil_interval)}};
  j["policies"] = json::array();
  for (const auto& p : r.policies) {
    json e;
    e["name"] = p.name;
    e["kind"] = p.kind;
    e["param"] = p.param ? json(*p.param) : json(nullptr);
    const auto& res = p.result;
    e["n"] = res.n_episodes;
    e["mean"] = res.mean;
    e["std"] = res.std;
    e["se"] = res.se;
    e["raw_mean"] = res.raw_mean;
    e["service_level"] = res.service_level;
    e["breakdown"] = breakdown_json(res.breakdown);
    json costs = json::array();
    for (const auto& ep : res.episodes) costs.push_back(ep.cost);
    e["episode_costs"] = costs;
    json curve = json::array();
    for (const auto& pt : p.curve) curve.push_back({pt.value, pt.mean, pt.se, pt.lb, pt.ub});
    e["curve"] = curve;
    j["policies"].push_back(e);
  }
  return j;
}

CellResult cell_result_from_json(const json& j) {
  CellResult r;
  const auto& c = j.at("cell");
  r.cell.index = c.at("index").get<int>();
  r.cell.lead_time = c.at("lead_time").get<int>();
  r.cell.lifetime = c.at("lifetime").get<int>();
  r.cell.expiration = c.at("expiration").get<double>();
  r.cell.lost_sales = c.at("lost_sales").get<double>();
  r.cell.yield_max = c.at("yield_max").get<double>();
  r.cell.noise = noise_kind_from_string(c.at("noise").get<std::string>());
  const auto& b = j.at("bounds");
  r.bounds.conforming = b.at("conforming").get<bool>();
  r.bounds.out_lb_opt = b.at("out_lb_opt").get<double>();
  r.bounds.out_ub_opt = b.at("out_ub_opt").get<double>();
  r.bounds.pil_lb_opt = b.at("pil_lb_opt").get<double>();
  r.bounds.pil_ub_opt = b.at("pil_ub_opt").get<double>();
  r.bounds.out_interval = interval_from(b.at("out_interval"));
  r.bounds.pil_interval = interval_from(b.at("pil_interval"));
  for (const auto& e : j.at("policies")) {
    PolicyOutcome p;
    p.name = e.at("name").get<std::string>();
    p.kind = e.at("kind").get<std::string>();
    if (!e.at("param").is_null()) p.param = e.at("param").get<double>();
    auto& res = p.result;
    res.n_episodes = e.at("n").get<int>();
    res.mean = e.at("mean").get<double>();
    res.std = e.at("std").get<double>();
    res.se = e.at("se").get<double>();
    res.raw_mean = e.at("raw_mean").get<double>();
    res.service_level = e.at("service_level").get<double>();
    res.breakdown = breakdown_from(e.at("breakdown"));
    for (const auto& cost : e.at("episode_costs")) {
      EpisodeSummary s;
      s.cost = cost.get<double>();
      res.episodes.push_back(s);
    }
    for (const auto& pt : e.at("curve")) {
      p.curve.push_back({pt.at(0).get<int>(), pt.at(1).get<double>(), pt.at(2).get<double>(),
                         pt.at(3).get<double>(), pt.at(4).get<double>()});
    }
    r.policies.push_back(std::move(p));
  }
  return r;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string cell_columns(const Cell& c) {
  return fmt::format("{},{},{},{},{},{},{}", c.index, c.lead_time, c.lifetime, c.expiration, c.lost_sales,
                     c.yield_max, to_string(c.noise));
}

constexpr const char* kCellHeader = "cell,L,m,w,b,z,noise";

std::optional<json> read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

}  // namespace

void write_results(const std::vector<CellResult>& cells, const fs::path& dir) {
  auto results = open_out(dir / "results.csv");
  auto episodes = open_out(dir / "episodes.csv");
  auto curves = open_out(dir / "curves.csv");
  auto bounds = open_out(dir / "bounds.csv");
  results << kCellHeader
          << ",policy,param_value,mean_cost,std_cost,se_cost,holding,lost_sales,expiration,fixed_order,"
             "service_level,yield_loss\n";
  episodes << "cell,policy,episode,cost\n";
  curves << "cell,policy,param_value,mean_cost,se_cost,lb,ub\n";
  bounds << kCellHeader
         << ",conforming,out_lb_opt,out_ub_opt,pil_lb_opt,pil_ub_opt,out_lo,out_hi,pil_lo,pil_hi\n";
  for (const auto& r : cells) {
    const auto cols = cell_columns(r.cell);
    for (const auto& p : r.policies) {
      const auto& res = p.result;
      const auto& b = res.breakdown;
      results << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", cols, p.name,
                             p.param ? csv_number(*p.param) : std::string(), res.mean, res.std, res.se,
                             b.holding, b.lost_sales, b.expiration, b.ordering_fixed, res.service_level,
                             b.yield_loss);
      for (std::size_t i = 0; i < res.episodes.size(); ++i)
        episodes << fmt::format("{},{},{},{}\n", r.cell.index, p.name, i, res.episodes[i].cost);
      for (const auto& pt : p.curve)
        curves << fmt::format("{},{},{},{},{},{},{}\n", r.cell.index, p.name, pt.value, pt.mean, pt.se, pt.lb, pt.ub);
    }
    const auto& b = r.bounds;
    bounds << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", cols, b.conforming ? 1 : 0, b.out_lb_opt,
                          b.out_ub_opt, b.pil_lb_opt, b.pil_ub_opt, b.out_interval.lo, b.out_interval.hi,
                          b.pil_interval.lo, b.pil_interval.hi);
  }
}

ExperimentSummary run_experiment(const RunConfig& config, const ExperimentOptions& options) {
  if (config.policies.empty()) throw InputError("policies: at least one policy is required");
  const fs::path dir = options.out_dir;
  fs::create_directories(dir / "cells");
  {
    auto meta = open_out(dir / "experiment.json");
    meta << to_json(config).dump(2) << '\n';
  }

  ExperimentSummary summary;
  std::vector<CellResult> done;
  std::vector<std::pair<int, std::string>> failures;
  const auto cells = expand_grid(config);
  summary.cells = static_cast<int>(cells.size());
  for (const auto& cell : cells) {
    const fs::path file = dir / "cells" / fmt::format("cell-{:04}.json", cell.index);
    json fingerprint = to_json(cell_config(config, cell));
    fingerprint["eval"].erase("parallel");  // does not change any number
    if (options.resume) {
      if (auto stored = read_json(file); stored && stored->value("config", json()) == fingerprint) {
        done.push_back(cell_result_from_json(stored->at("result")));
        ++summary.reused;
        continue;
      }
    }
    try {
      CellResult r = run_cell(config, cell);
      const json stored = {{"config", fingerprint}, {"result", to_json(r)}};
      const fs::path tmp = file.string() + ".tmp";
      {
        auto out = open_out(tmp);
        out << stored.dump() << '\n';
      }
      fs::rename(tmp, file);
      // reload so fresh and resumed runs format identically
      done.push_back(cell_result_from_json(stored.at("result")));
      if (options.progress) *options.progress << fmt::format("cell {} [{}] done\n", cell.index, cell.label());
    } catch (const std::exception& e) {
      failures.emplace_back(cell.index, e.what());
      ++summary.failed;
      if (options.progress) *options.progress << fmt::format("cell {} [{}] failed: {}\n", cell.index, cell.label(), e.what());
    }
  }

  write_results(done, dir);
  auto fail_out = open_out(dir / "failures.csv");
  fail_out << "cell,error\n";
  for (const auto& [index, what] : failures) {
    std::string msg = what;
    for (char& ch : msg) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    fail_out << fmt::format("{},{}\n", index, msg);
  }
  fail_out.close();
  if (!done.empty()) render_report(dir, config.reference);
  return summary;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct ReportRow {
  std::string cell;
  std::string label;
  std::string policy;
  std::string param;
  double mean = 0.0;
  double std = 0.0;
  double se = 0.0;
  double service = 0.0;
};

}  // namespace

void render_report(const fs::path& dir, const std::string& reference_in) {
  std::ifstream in(dir / "results.csv");
  if (!in) throw InputError("no results.csv in " + dir.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError((dir / "results.csv").string() + ": empty file");
  const auto header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"cell", "L", "m", "w", "b", "z", "noise", "policy", "param_value", "mean_cost",
                           "std_cost", "se_cost", "service_level"}) {
    if (!col.count(need)) throw InputError((dir / "results.csv").string() + ": missing column " + need);
  }

  std::vector<ReportRow> rows;
  std::vector<std::string> policies;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size())
      throw InputError(fmt::format("{}:{}: expected {} fields", (dir / "results.csv").string(), line_no, header.size()));
    ReportRow r;
    r.cell = f[col["cell"]];
    r.label = fmt::format("L={} m={} w={} b={} z={} {}", f[col["L"]], f[col["m"]], f[col["w"]], f[col["b"]],
                          f[col["z"]], f[col["noise"]]);
    r.policy = f[col["policy"]];
    r.param = f[col["param_value"]];
    try {
      r.mean = std::stod(f[col["mean_cost"]]);
      r.std = std::stod(f[col["std_cost"]]);
      r.se = std::stod(f[col["se_cost"]]);
      r.service = std::stod(f[col["service_level"]]);
    } catch (const std::logic_error&) {
      throw InputError(fmt::format("{}:{}: malformed number", (dir / "results.csv").string(), line_no));
    }
    if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) policies.push_back(r.policy);
    rows.push_back(r);
  }
  if (rows.empty()) throw InputError((dir / "results.csv").string() + ": no result rows");

  std::string reference = reference_in;
  if (reference.empty()) {
    if (auto meta = read_json(dir / "experiment.json")) {
      if (meta->contains("eval")) reference = meta->at("eval").value("reference", std::string());
    }
  }
  if (reference.empty()) reference = policies.front();
  if (std::find(policies.begin(), policies.end(), reference) == policies.end())
    throw InputError("reference policy '" + reference + "' not in results");

  // cells in first-seen order
  std::vector<std::string> cell_order;
  std::map<std::string, std::map<std::string, const ReportRow*>> by_cell;
  for (const auto& r : rows) {
    if (!by_cell.count(r.cell)) cell_order.push_back(r.cell);
    by_cell[r.cell][r.policy] = &r;
  }

  auto bars = open_out(dir / "bars.csv");
  bars << "cell,label,policy,mean_cost,std_cost\n";
  for (const auto& r : rows) bars << fmt::format("{},{},{},{},{}\n", r.cell, r.label, r.policy, r.mean, r.std);

  auto gaps = open_out(dir / "gaps.csv");
  gaps << "cell,policy,reference,gap_pct\n";
  auto text = open_out(dir / "report.txt");
  text << "Average total cost (mean +- std over episodes)\n\n";
  text << fmt::format("{:<5} {:<44}", "cell", "setting");
  for (const auto& p : policies) text << fmt::format(" {:>24}", p);
  text << '\n';
  for (const auto& cell : cell_order) {
    const auto& m = by_cell[cell];
    text << fmt::format("{:<5} {:<44}", cell, m.begin()->second->label);
    for (const auto& p : policies) {
      const auto it = m.find(p);
      text << fmt::format(" {:>24}", it == m.end() ? std::string("-")
                                                   : fmt::format("{:.2f} +- {:.2f}", it->second->mean, it->second->std));
    }
    text << '\n';
  }

  text << fmt::format("\nPercentage gap (C - C_ref) / C_ref * 100, reference {}\n\n", reference);
  text << fmt::format("{:<5} {:<44}", "cell", "setting");
  for (const auto& p : policies) {
    if (p != reference) text << fmt::format(" {:>12}", p);
  }
  text << '\n';
  for (const auto& cell : cell_order) {
    const auto& m = by_cell[cell];
    text << fmt::format("{:<5} {:<44}", cell, m.begin()->second->label);
    const auto ref = m.find(reference);
    for (const auto& p : policies) {
      if (p == reference) continue;
      const auto it = m.find(p);
      std::string shown = "-";
      if (it != m.end() && ref != m.end() && ref->second->mean != 0.0) {
        const double gap = percentage_gap(it->second->mean, ref->second->mean);
        gaps << fmt::format("{},{},{},{}\n", cell, p, reference, gap);
        shown = fmt::format("{:.1f}", gap);
      }
      text << fmt::format(" {:>12}", shown);
    }
    text << '\n';
  }
}

}  // namespace perishable
