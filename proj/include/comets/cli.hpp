// Subcommands behind tools/comets. Each returns the process exit code:
// 0 success, 1 invalid input or a failed check, 2 usage error or missing file.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "comets/dual.hpp"
#include "comets/network_model.hpp"

namespace comets::cli {

enum class LogLevel { Quiet, Info, Debug };

/// COMETS_LOG = quiet | info | debug; unset or unknown means info.
LogLevel log_level_from_env();

struct GenOptions {
  std::string kind = "layered";  // layered | random
  std::size_t users = 100;
  std::size_t forwarders = 3;    // random only
  std::vector<std::size_t> fanout = {3, 3};
  double capacity_min = 2.0;     // random only
  double capacity_max = 20.0;
  double backbone_mbps = 400.0;  // layered only
  double access_mbps = 100.0;
  std::size_t levels = 0;        // 0 keeps the whole default ladder
};

struct RunConfig {
  std::string subcommand;
  std::filesystem::path scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> loss;
  std::optional<double> eps;
  std::optional<std::size_t> tmax;
  std::optional<double> alpha0;
  std::optional<double> beta0;
  std::optional<DualMode> mode;
  std::filesystem::path out = ".";
  std::vector<std::size_t> counts;
  std::optional<std::filesystem::path> golden;
  bool write_golden = false;
  GenOptions gen;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Range checks on the overrides; throws UsageError.
void validate(const RunConfig& cfg);

/// Scenario parameters and optimizer options after overrides.
void apply_overrides(const RunConfig& cfg, Scenario& s);
DualOptions optimizer_options(const RunConfig& cfg);

int run_optimize(const RunConfig& cfg, std::ostream& err);   // trace.csv solution.json gap.json trace_timing.csv
int run_simulate(const RunConfig& cfg, std::ostream& err);   // events.csv metrics.json clients.csv
int run_sweep(const RunConfig& cfg, std::ostream& err);      // sweep.csv
int run_verify(const RunConfig& cfg, std::ostream& err);     // verdict.json
int run_gen(const RunConfig& cfg, std::ostream& err);        // scenario.json

/// Validates, runs the subcommand and maps exceptions to exit codes.
int dispatch(const RunConfig& cfg, std::ostream& err);

}  // namespace comets::cli
