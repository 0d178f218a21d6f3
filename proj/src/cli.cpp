#include "comets/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "comets/message.hpp"
#include "comets/oracle.hpp"
#include "comets/reconstruct.hpp"
#include "comets/scenario_io.hpp"
#include "comets/sim/simulator.hpp"
#include "comets/topology_gen.hpp"

namespace comets::cli {

namespace fs = std::filesystem;
using nlohmann::json;

LogLevel log_level_from_env() {
  const char* v = std::getenv("COMETS_LOG");
  if (!v) return LogLevel::Info;
  const std::string s(v);
  if (s == "quiet") return LogLevel::Quiet;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

namespace {

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err), level_(log_level_from_env()) {}
  void info(const std::string& msg) const {
    if (level_ != LogLevel::Quiet) err_ << "comets: " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ == LogLevel::Debug) err_ << "comets: " << msg << '\n';
  }
  void error(const std::string& msg) const { err_ << "comets: error: " << msg << '\n'; }

 private:
  std::ostream& err_;
  LogLevel level_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

Scenario load(const RunConfig& cfg) {
  if (cfg.scenario.empty()) throw UsageError("--scenario is required");
  if (!fs::exists(cfg.scenario))
    throw UsageError("scenario file not found: " + cfg.scenario.string());
  Scenario s = load_scenario(cfg.scenario);
  apply_overrides(cfg, s);
  return s;
}

void prepare_out(const RunConfig& cfg) { fs::create_directories(cfg.out); }

std::optional<OracleSolution> oracle_optimum(const Scenario& s) {
  return is_tree(s) ? ilp_optimum_tree(s) : ilp_optimum_small_dag(s);
}

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

fs::path golden_path(const RunConfig& cfg) {
  if (cfg.golden) return *cfg.golden;
  fs::path p = cfg.scenario;
  return p.replace_extension().string() + ".golden.json";
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (cfg.loss && !(*cfg.loss >= 0.0 && *cfg.loss < 1.0))
    throw UsageError("--loss must be in [0, 1)");
  if (cfg.eps && !(*cfg.eps > 0.0)) throw UsageError("--eps must be > 0");
  if (cfg.tmax && *cfg.tmax == 0) throw UsageError("--tmax must be >= 1");
  if (cfg.alpha0 && !(*cfg.alpha0 > 0.0 && std::isfinite(*cfg.alpha0)))
    throw UsageError("--alpha0 must be a positive number");
  if (cfg.beta0 && !(*cfg.beta0 > 0.0 && std::isfinite(*cfg.beta0)))
    throw UsageError("--beta0 must be a positive number");
  if (cfg.gen.kind != "layered" && cfg.gen.kind != "random")
    throw UsageError("--kind must be layered or random");
  if (!(cfg.gen.capacity_min > 0.0 && cfg.gen.capacity_min <= cfg.gen.capacity_max))
    throw UsageError("capacity range must satisfy 0 < min <= max");
}

void apply_overrides(const RunConfig& cfg, Scenario& s) {
  if (cfg.seed) s.sim.seed = *cfg.seed;
  if (cfg.loss) s.sim.loss_rate = *cfg.loss;
}

DualOptions optimizer_options(const RunConfig& cfg) {
  DualOptions o;
  o.steps = StepSchedule(cfg.alpha0.value_or(1.0), cfg.beta0.value_or(1.0));
  if (cfg.tmax) o.t_max = *cfg.tmax;
  if (cfg.eps) o.eps = *cfg.eps;
  if (cfg.mode) o.mode = *cfg.mode;
  o.keep_iterates = false;
  return o;
}

int run_optimize(const RunConfig& cfg, std::ostream& err) {
  const Log log(err);
  const Scenario s = load(cfg);
  prepare_out(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const OptimizeResult r = optimize(s, optimizer_options(cfg));
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  log.debug("optimizer finished in " + fmt(ms) + " ms");

  std::ostringstream trace;
  r.trace.write_csv(trace);
  write_text(cfg.out / "trace.csv", trace.str());
  std::ostringstream timing;
  r.trace.write_csv(timing, true);
  write_text(cfg.out / "trace_timing.csv", timing.str());
  write_json(cfg.out / "solution.json", r.solution_json(s));

  json gap = r.gap_json();
  int code = 0;
  try {
    const auto opt = oracle_optimum(s);
    if (!opt) {
      gap["oracle"] = {{"status", "infeasible"}};
    } else {
      double min_g = r.dual_bound;
      const bool upper = opt->z <= min_g + 1e-6;
      const bool lower = !r.feasible || r.z_best <= opt->z + 1e-6;
      gap["oracle"] = {{"status", "solved"},
                       {"optimum", opt->z},
                       {"sandwich", upper && lower}};
      if (!(upper && lower)) {
        log.error("sandwich violated: primal " + fmt(r.z_best) + ", optimum " + fmt(opt->z) +
                  ", dual " + fmt(min_g));
        code = 1;
      }
    }
  } catch (const OracleLimitError&) {
    gap["oracle"] = {{"status", "skipped: limits"}};
  }
  write_json(cfg.out / "gap.json", gap);
  log.info("optimize: primal " + fmt(r.z_best) + ", dual bound " + fmt(r.dual_bound) + ", gap " +
           fmt(r.gap) + " after " + std::to_string(r.trace.rows.size()) + " iterations");
  return code;
}

int run_simulate(const RunConfig& cfg, std::ostream& err) {
  const Log log(err);
  const Scenario s = load(cfg);
  prepare_out(cfg);
  sim::SimOptions so;
  so.mode = cfg.mode.value_or(DualMode::Centralized);
  so.optimizer = optimizer_options(cfg);
  const sim::SimResult r = sim::run_simulation(s, so);
  write_text(cfg.out / "events.csv", "time,node,kind,name,bytes\n" + r.event_log);
  write_json(cfg.out / "metrics.json", r.metrics.to_json());
  std::ostringstream clients;
  r.metrics.write_client_csv(clients);
  write_text(cfg.out / "clients.csv", clients.str());
  log.info("simulate: " + std::to_string(r.traces.size()) + " clients, composite QoE " +
           fmt(r.metrics.composite) + ", Jain " + fmt(r.metrics.jain));
  if (r.counters.horizon_reached) log.info("simulate: horizon reached before all clients finished");
  return 0;
}

int run_sweep(const RunConfig& cfg, std::ostream& err) {
  const Log log(err);
  Scenario base;
  if (cfg.scenario.empty()) {
    base = layered_tree(LayeredTreeOptions{}, cfg.seed.value_or(1));
    apply_overrides(cfg, base);
  } else {
    base = load(cfg);
  }
  prepare_out(cfg);
  std::ostringstream csv;
  csv << "users,composite_qoe,fairness,mean_vmaf,jitter_ms,startup_s,buffer_s,interarrival_ms,"
         "unserved,optimizer_ms,optimizer_ms_per_iter,iterations,gap,status\n";
  for (std::size_t n : cfg.counts) {
    try {
      const Scenario s = scale_users(base, n);
      const DualOptions o = optimizer_options(cfg);
      const auto t0 = std::chrono::steady_clock::now();
      const OptimizeResult opt = optimize(s, o);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      sim::SimOptions so;
      so.mode = o.mode;
      so.optimizer = o;
      so.record_log = false;
      const sim::SimResult r = sim::run_simulation(s, so);
      double jitter = 0.0, buffer = 0.0;
      for (const auto& c : r.metrics.clients) {
        jitter += c.jitter_ms;
        buffer += c.mean_buffer_s;
      }
      const double k = r.metrics.clients.empty() ? 1.0 : static_cast<double>(r.metrics.clients.size());
      const std::size_t iters = opt.trace.rows.size();
      csv << n << ',' << fmt(r.metrics.composite) << ',' << fmt(r.metrics.jain) << ','
          << fmt(r.metrics.mean_vmaf) << ',' << fmt(jitter / k) << ',' << fmt(r.metrics.mean_startup_s)
          << ',' << fmt(buffer / k) << ',' << fmt(r.metrics.mean_interarrival_ms) << ','
          << r.metrics.unserved << ',' << fmt(ms) << ',' << fmt(iters ? ms / iters : 0.0) << ','
          << iters << ',' << fmt(opt.gap) << ",ok\n";
      log.debug("sweep: " + std::to_string(n) + " users done");
    } catch (const std::exception& e) {
      csv << n << ",,,,,,,,,,,,,error: " << e.what() << '\n';
      log.error("sweep: " + std::to_string(n) + " users: " + e.what());
    }
  }
  write_text(cfg.out / "sweep.csv", csv.str());
  log.info("sweep: " + std::to_string(cfg.counts.size()) + " rows");
  return 0;
}

int run_verify(const RunConfig& cfg, std::ostream& err) {
  const Log log(err);
  const Scenario s = load(cfg);
  prepare_out(cfg);
  json verdict = {{"scenario", cfg.scenario.filename().string()}};

  std::optional<OracleSolution> opt;
  try {
    opt = oracle_optimum(s);
  } catch (const OracleLimitError& e) {
    verdict["verdict"] = "skipped: limits";
    verdict["detail"] = e.what();
    verdict["checks"] = json::array();
    write_json(cfg.out / "verdict.json", verdict);
    log.info("verify: skipped: limits");
    return 0;
  }

  const OptimizeResult r = optimize(s, optimizer_options(cfg));
  std::vector<Check> checks;

  // With no feasible assignment the incumbent must admit unserved users.
  checks.push_back({"oracle_consistency", opt.has_value() || !r.feasible,
                    opt ? "optimum " + fmt(opt->z)
                        : "infeasible instance, incumbent leaves " +
                              std::to_string(r.best.unserved_users.size()) + " users unserved"});
  if (opt) {
    std::size_t bad = 0;
    for (const auto& row : r.trace.rows)
      if (opt->z > row.g + 1e-6) ++bad;
    checks.push_back({"weak_duality", bad == 0,
                      std::to_string(bad) + " iterations with g below the optimum"});
    checks.push_back({"primal_bound", !r.feasible || r.z_best <= opt->z + 1e-6,
                      "primal " + fmt(r.z_best) + " vs optimum " + fmt(opt->z)});
    checks.push_back({"oracle_solution_feasible", check(s, opt->x, opt->y, true).empty(),
                      "oracle point against the integral constraint check"});
  }

  {
    const ConstraintReport rep = check(s, r.best.x, r.best.y, true);
    const std::set<NodeId> unserved(r.best.unserved_users.begin(), r.best.unserved_users.end());
    std::size_t other = rep.total() - rep.count(ConstraintFamily::One);
    for (const auto& e : rep.entries(ConstraintFamily::One))
      if (!e.node || !unserved.count(*e.node)) ++other;
    checks.push_back({"reconstruction_feasible", other == 0,
                      std::to_string(other) + " violations outside unserved users"});
  }

  {
    bool ok = true;
    std::string detail = "final multipliers";
    try {
      const Maximizers m = solve_subproblems(s, r.trace.final_state);
      dual_value(s, r.trace.final_state, m.x, m.y);
    } catch (const InternalConsistencyError& e) {
      ok = false;
      detail = e.what();
    }
    checks.push_back({"decomposition", ok, detail});
  }

  {
    const auto& g = s.graph;
    const auto B = s.catalog.bandwidths();
    const auto& lam = r.trace.final_state;
    std::size_t bad = 0;
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      const auto& ed = g.edge(e);
      if (g.role(ed.to) == NodeRole::Server) continue;
      std::vector<double> coef(B.size());
      for (std::size_t l = 0; l < B.size(); ++l)
        coef[l] = lam.lambda1(ed.to, l) - (g.role(ed.from) == NodeRole::Forwarder ? lam.lambda2(e, l) : 0.0);
      const auto y = g.role(ed.from) == NodeRole::Server
                         ? solve_server_edge(lam.lambda1.row(ed.to), B, ed.capacity_mbps)
                         : solve_forwarder_edge(lam.lambda1.row(ed.to), lam.lambda2.row(e), B, ed.capacity_mbps);
      const double closed = std::inner_product(coef.begin(), coef.end(), y.begin(), 0.0);
      const double scale = std::max(1.0, std::abs(closed));
      if (closed + 1e-9 * scale < knapsack_grid_check(coef, B, ed.capacity_mbps, 1e-3)) ++bad;
    }
    checks.push_back({"edge_subproblems", bad == 0,
                      std::to_string(bad) + " edges below the grid optimum"});
  }

  {
    bool ok = true;
    const auto& lam = r.trace.final_state.lambda1;
    for (NodeId n = 0; n < lam.rows(); ++n) {
      const auto row = lam.row(n);
      MultiplierMessage m{n, static_cast<std::uint32_t>(r.trace.rows.size()), {row.begin(), row.end()}};
      if (decode_message(encode_message(m), row.size()).values != m.values) ok = false;
    }
    checks.push_back({"message_codec", ok, "final lambda1 rows round-trip"});
  }

  const fs::path gp = golden_path(cfg);
  if (cfg.write_golden) {
    json golden = {{"optimum", opt ? json(opt->z) : json(nullptr)},
                   {"primal", r.z_best},
                   {"dual_bound", r.dual_bound}};
    write_json(gp, golden);
    log.info("verify: wrote " + gp.string());
  }
  if (fs::exists(gp)) {
    try {
      std::ifstream in(gp);
      const json golden = json::parse(in);
      const auto near = [](const json& want, double got) {
        return want.is_number() && std::abs(want.get<double>() - got) <= 1e-9 * std::max(1.0, std::abs(got));
      };
      if (opt)
        checks.push_back({"golden_optimum", near(golden.value("optimum", json()), opt->z),
                          "golden " + golden.value("optimum", json()).dump() + " vs " + fmt(opt->z)});
      else
        checks.push_back({"golden_optimum", golden.value("optimum", json(0)).is_null(),
                          "golden expects an infeasible instance"});
      checks.push_back({"golden_primal", near(golden.value("primal", json()), r.z_best),
                        "golden " + golden.value("primal", json()).dump() + " vs " + fmt(r.z_best)});
      checks.push_back({"golden_dual_bound", near(golden.value("dual_bound", json()), r.dual_bound),
                        "golden " + golden.value("dual_bound", json()).dump() + " vs " + fmt(r.dual_bound)});
    } catch (const json::exception& e) {
      checks.push_back({"golden_parse", false, e.what()});
    }
  }

  bool all = true;
  json list = json::array();
  for (const auto& c : checks) {
    all = all && c.pass;
    list.push_back({{"name", c.name}, {"status", c.pass ? "pass" : "fail"}, {"detail", c.detail}});
    if (!c.pass) log.error("verify: " + c.name + " failed: " + c.detail);
  }
  verdict["verdict"] = all ? "pass" : "fail";
  verdict["checks"] = list;
  write_json(cfg.out / "verdict.json", verdict);
  log.info(std::string("verify: ") + (all ? "pass" : "fail"));
  return all ? 0 : 1;
}

int run_gen(const RunConfig& cfg, std::ostream& err) {
  const Log log(err);
  const GenOptions& g = cfg.gen;
  ResolutionCatalog catalog = ResolutionCatalog::default_ladder();
  if (g.levels > 0 && g.levels < catalog.size()) {
    const auto& all = catalog.levels();
    catalog = ResolutionCatalog({all.begin(), all.begin() + static_cast<std::ptrdiff_t>(g.levels)},
                                catalog.a(), catalog.b());
  }
  const std::uint64_t seed = cfg.seed.value_or(1);
  Scenario s;
  if (g.kind == "random") {
    RandomTreeOptions o;
    o.forwarders = g.forwarders;
    o.users = g.users;
    o.catalog = catalog;
    o.capacity_min = g.capacity_min;
    o.capacity_max = g.capacity_max;
    s = random_tree(o, seed);
  } else {
    LayeredTreeOptions o;
    o.fanout = g.fanout;
    o.users = g.users;
    o.catalog = catalog;
    o.backbone_mbps = g.backbone_mbps;
    o.access_mbps = g.access_mbps;
    s = layered_tree(o, seed);
  }
  apply_overrides(cfg, s);
  prepare_out(cfg);
  save_scenario(s, cfg.out / "scenario.json");
  log.info("gen: " + std::to_string(s.graph.node_count()) + " nodes, " + std::to_string(s.users.size()) +
           " users");
  return 0;
}

int dispatch(const RunConfig& cfg, std::ostream& err) {
  const Log log(err);
  try {
    validate(cfg);
    if (cfg.subcommand == "optimize") return run_optimize(cfg, err);
    if (cfg.subcommand == "simulate") return run_simulate(cfg, err);
    if (cfg.subcommand == "sweep") return run_sweep(cfg, err);
    if (cfg.subcommand == "verify") return run_verify(cfg, err);
    if (cfg.subcommand == "gen") return run_gen(cfg, err);
    throw UsageError("unknown subcommand '" + cfg.subcommand + "'");
  } catch (const UsageError& e) {
    log.error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log.error(e.what());
    return 1;
  }
}

}  // namespace comets::cli
