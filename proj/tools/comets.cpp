#include <iostream>

#include <CLI11.hpp>

#include "comets/cli.hpp"

namespace {

void common(CLI::App* sub, comets::cli::RunConfig& cfg, std::string& mode) {
  sub->add_option("--scenario", cfg.scenario, "scenario JSON file");
  sub->add_option("--seed", cfg.seed, "RNG seed override");
  sub->add_option("--loss", cfg.loss, "per-packet loss probability override");
  sub->add_option("--eps", cfg.eps, "multiplier stopping tolerance");
  sub->add_option("--tmax", cfg.tmax, "iteration limit");
  sub->add_option("--alpha0", cfg.alpha0, "lambda1 step base");
  sub->add_option("--beta0", cfg.beta0, "lambda2 step base");
  sub->add_option("--mode", mode, "centralized | distributed")
      ->check(CLI::IsMember({"centralized", "distributed"}));
  sub->add_option("--out", cfg.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-decomposition bitrate optimizer and delivery simulator"};
  app.require_subcommand(1);
  comets::cli::RunConfig cfg;
  std::string mode;

  auto* opt = app.add_subcommand("optimize", "run the optimizer; writes trace.csv solution.json gap.json");
  auto* sim = app.add_subcommand("simulate", "run the simulator; writes events.csv metrics.json clients.csv");
  auto* sweep = app.add_subcommand("sweep", "optimize and simulate per user count; writes sweep.csv");
  auto* verify = app.add_subcommand("verify", "oracle and invariant checks; writes verdict.json");
  auto* gen = app.add_subcommand("gen", "generate a scenario; writes scenario.json");
  for (auto* sub : {opt, sim, sweep, verify, gen}) common(sub, cfg, mode);

  sweep->add_option("--counts", cfg.counts, "user counts")->delimiter(',');
  verify->add_option("--golden", cfg.golden, "golden file (default <scenario>.golden.json)");
  verify->add_flag("--write-golden", cfg.write_golden, "record the current results as golden");
  gen->add_option("--kind", cfg.gen.kind, "layered | random");
  gen->add_option("--users", cfg.gen.users);
  gen->add_option("--forwarders", cfg.gen.forwarders, "random trees only");
  gen->add_option("--fanout", cfg.gen.fanout, "children per tier, layered only")->delimiter(',');
  gen->add_option("--capacity-min", cfg.gen.capacity_min);
  gen->add_option("--capacity-max", cfg.gen.capacity_max);
  gen->add_option("--backbone", cfg.gen.backbone_mbps);
  gen->add_option("--access", cfg.gen.access_mbps);
  gen->add_option("--levels", cfg.gen.levels, "keep the lowest n ladder levels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
  if (!mode.empty()) cfg.mode = comets::parse_mode(mode);
  return comets::cli::dispatch(cfg, std::cerr);
}
