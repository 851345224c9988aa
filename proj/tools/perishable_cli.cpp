#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "perishable/bridge.hpp"
#include "perishable/config.hpp"
#include "perishable/errors.hpp"
#include "perishable/experiment.hpp"

using namespace perishable;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> parallel;
  std::string out;
  bool advisory = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", c.config, "run configuration (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--seed", c.seed, "master seed (overrides eval.seed)");
  cmd->add_option("--episodes", c.episodes, "episodes per evaluation (overrides eval.episodes)");
  cmd->add_option("--parallel", c.parallel, "worker threads (overrides eval.parallel)");
  cmd->add_option("--out", c.out, "output file or directory");
  cmd->add_flag("--advisory", c.advisory, "allow bounds on configurations outside their assumptions");
}

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (c.seed) cfg.eval.master_seed = *c.seed;
  if (c.episodes) cfg.eval.n_episodes = *c.episodes;
  if (c.parallel) cfg.eval.parallel = *c.parallel;
  try {
    cfg.eval.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return cfg;
}

std::string param_text(const PolicySpec& spec) {
  if (const auto* o = std::get_if<OutPolicy>(&spec)) return fmt::format("{}", o->s);
  if (const auto* p = std::get_if<PilPolicy>(&spec)) return fmt::format("{}", p->u);
  if (const auto* b = std::get_if<BmsPolicy>(&spec)) return fmt::format("{}", b->k2);
  return "";
}

void write_trace(std::ostream& out, const std::string& policy, const EpisodeLedger& ledger) {
  for (const auto& p : ledger.periods) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", policy, p.t, p.order_batches, p.order_units, p.arrived,
                       p.demand, p.sales, p.lost_sales, p.expired, p.end_on_hand, p.transformed.total());
  }
}

int cmd_simulate(const Common& c, const std::string& only, const std::string& trace_path) {
  const RunConfig cfg = load(c);
  const Problem problem = build_problem(cfg);
  if (cfg.policies.empty()) throw InputError("policies: at least one policy is required");

  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + c.out);
  }
  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write " + trace_path);
    trace << "policy,t,batches,order_units,arrived,demand,sales,lost_sales,expired,end_on_hand,cost\n";
  }
  const std::string header =
      "policy,param_value,episodes,mean_cost,std_cost,se_cost,raw_mean_cost,holding,lost_sales,expiration,"
      "fixed_order,yield_loss,service_level\n";
  std::cout << header;
  if (file) file << header;
  bool matched = false;
  for (const auto& pc : cfg.policies) {
    if (!only.empty() && pc.name != only) continue;
    matched = true;
    const auto r = evaluate(problem, pc.spec, cfg.eval);
    const auto& b = r.breakdown;
    const auto row = fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", pc.name, param_text(pc.spec),
                                 r.n_episodes, r.mean, r.std, r.se, r.raw_mean, b.holding, b.lost_sales,
                                 b.expiration, b.ordering_fixed, b.yield_loss, r.service_level);
    std::cout << row;
    if (file) file << row;
    if (trace) {
      const auto prepared = prepare_policy(pc.spec, problem.scenario, problem.params, problem.rates);
      write_trace(trace, pc.name, run_episode(problem, prepared, episode_seed(cfg.eval, 0, 0)));
    }
  }
  if (!matched) throw InputError("no policy named '" + only + "'");
  return 0;
}

int cmd_bounds(const Common& c, bool rows) {
  const RunConfig cfg = load(c);
  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + c.out);
    file << "cell,L,m,w,b,z,noise,conforming,out_lb_opt,out_ub_opt,pil_lb_opt,pil_ub_opt,out_lo,out_hi,pil_lo,pil_hi\n";
  }
  std::cout << fmt::format("{:<5} {:<44} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12}\n", "cell", "setting", "OUT LB",
                           "OUT UB", "PIL LB", "PIL UB", "OUT range", "PIL range");
  for (const auto& cell : expand_grid(cfg)) {
    const Problem problem = build_problem(cell_config(cfg, cell));
    if (!bounds_conforming(problem) && !c.advisory) {
      throw InputError(fmt::format("cell {} [{}]: bounds assume no fixed ordering cost, no yield loss and a "
                                   "constant noise level; pass --advisory to print them anyway",
                                   cell.index, cell.label()));
    }
    const auto b = cell_bounds(problem, cfg.margin);
    std::cout << fmt::format("{:<5} {:<44} {:>10.3f} {:>10.3f} {:>10.3f} {:>10.3f} {:>12} {:>12}\n", cell.index,
                             cell.label(), b.out_lb_opt, b.out_ub_opt, b.pil_lb_opt, b.pil_ub_opt,
                             fmt::format("[{},{}]", b.out_interval.lo, b.out_interval.hi),
                             fmt::format("[{},{}]", b.pil_interval.lo, b.pil_interval.hi));
    if (file) {
      file << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", cell.index, cell.lead_time,
                          cell.lifetime, cell.expiration, cell.lost_sales, cell.yield_max, to_string(cell.noise),
                          b.conforming ? 1 : 0, b.out_lb_opt, b.out_ub_opt, b.pil_lb_opt, b.pil_ub_opt,
                          b.out_interval.lo, b.out_interval.hi, b.pil_interval.lo, b.pil_interval.hi);
    }
    if (rows) {
      const auto ctx = bound_context(problem);
      for (auto kind : {PolicyKind::out, PolicyKind::pil}) {
        for (const auto& r : bounds_report(kind, ctx, cfg.margin).rows) {
          std::cout << fmt::format("      {} s={} lb={:.4f} ub={:.4f}\n", kind == PolicyKind::out ? "out" : "pil",
                                   r.s, r.lb, r.ub);
        }
      }
    }
  }
  return 0;
}

int cmd_optimize(const Common& c) {
  const RunConfig cfg = load(c);
  const Problem problem = build_problem(cfg);
  const auto ctx = bound_context(problem);
  if (!bounds_conforming(problem) && !c.advisory) {
    throw InputError("the search interval comes from bounds that assume no fixed ordering cost, no yield loss "
                     "and a constant noise level; pass --advisory to search anyway");
  }
  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + c.out);
  }
  const std::string header = "policy,param_value,mean_cost,se_cost,lb,ub,chosen\n";
  std::cout << header;
  if (file) file << header;
  bool any = false;
  for (const auto& pc : cfg.policies) {
    const bool is_out = std::holds_alternative<OutPolicy>(pc.spec);
    if (!is_out && !std::holds_alternative<PilPolicy>(pc.spec)) continue;
    any = true;
    const auto interval = search_interval(is_out ? PolicyKind::out : PolicyKind::pil, ctx, cfg.margin);
    SearchOptions search_options;
    search_options.extend_at_edges = !bounds_conforming(problem);
    const auto sr = optimize_parameter(problem, pc.spec, interval, cfg.eval, search_options);
    for (std::size_t i = 0; i < sr.candidates.size(); ++i) {
      const double v = sr.candidates[i];
      const auto row = fmt::format("{},{},{},{},{},{},{}\n", pc.name, sr.candidates[i], sr.results[i].mean,
                                   sr.results[i].se, is_out ? out_lb(v, ctx) : pil_lb(v, ctx),
                                   is_out ? out_ub(v, ctx) : pil_ub(v, ctx), i == sr.best_index ? 1 : 0);
      std::cout << row;
      if (file) file << row;
    }
  }
  if (!any) throw InputError("policies: no out or pil policy to optimize");
  return 0;
}

int cmd_experiment(const Common& c, bool no_resume) {
  if (c.out.empty()) throw InputError("experiment needs --out <directory>");
  const RunConfig cfg = load(c);
  ExperimentOptions opt;
  opt.out_dir = c.out;
  opt.resume = !no_resume;
  opt.progress = &std::cerr;
  const auto s = run_experiment(cfg, opt);
  std::cout << fmt::format("cells {} reused {} failed {}\n", s.cells, s.reused, s.failed);
  return 0;
}

int cmd_report(const std::string& dir, const std::string& reference) {
  if (dir.empty()) throw InputError("report needs --out <results directory>");
  render_report(dir, reference);
  std::ifstream in(fs::path(dir) / "report.txt");
  std::cout << in.rdbuf();
  return 0;
}

int cmd_serve(const Common& c, bool use_stdio, std::optional<int> port, bool normalize) {
  RunConfig cfg = load(c);
  BridgeOptions options;
  options.normalize = normalize || cfg.normalize_observations;
  const Problem problem = build_problem(cfg);
  if (use_stdio == port.has_value()) throw InputError("serve-env needs exactly one of --stdio, --port");
  if (use_stdio) {
    serve_stream(BridgeEnv(problem, options), std::cin, std::cout);
    return 0;
  }
  if (*port < 1 || *port > 65535) throw InputError("--port must lie in 1..65535");
  std::cerr << fmt::format("serving on 127.0.0.1:{}\n", *port);
  serve_tcp(problem, options, *port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perishable inventory simulation, bounds and policy evaluation"};
  app.require_subcommand(1);

  Common sim, bnd, opt, exp, rep, srv;
  std::string only, trace, reference;
  bool rows = false, no_resume = false, use_stdio = false, normalize = false;
  std::optional<int> port;

  auto* simulate = app.add_subcommand("simulate", "evaluate the configured policies");
  add_common(simulate, sim);
  simulate->add_option("--policy", only, "only this policy");
  simulate->add_option("--trace", trace, "per-period CSV of the first episode");

  auto* bounds = app.add_subcommand("bounds", "cost bounds and search intervals per grid cell");
  add_common(bounds, bnd);
  bounds->add_flag("--rows", rows, "also print LB/UB at every integer of the interval");

  auto* optimize = app.add_subcommand("optimize", "grid search of the OUT/PIL safety stock");
  add_common(optimize, opt);

  auto* experiment = app.add_subcommand("experiment", "run a grid of cells and write reports");
  add_common(experiment, exp);
  experiment->add_flag("--no-resume", no_resume, "recompute cells that already have results");

  auto* report = app.add_subcommand("report", "render tables from an experiment directory");
  add_common(report, rep, false);
  report->add_option("--reference", reference, "policy the gaps are measured against");

  auto* serve = app.add_subcommand("serve-env", "serve the environment over newline-delimited JSON");
  add_common(serve, srv);
  serve->add_flag("--stdio", use_stdio, "talk over standard input/output");
  serve->add_option("--port", port, "listen on 127.0.0.1:PORT");
  serve->add_flag("--normalize", normalize, "scale observations by the peak forecast");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim, only, trace);
    if (*bounds) return cmd_bounds(bnd, rows);
    if (*optimize) return cmd_optimize(opt);
    if (*experiment) return cmd_experiment(exp, no_resume);
    if (*report) return cmd_report(rep.out, reference);
    if (*serve) return cmd_serve(srv, use_stdio, port, normalize);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
