// Evaluation metrics computed from simulated client traces.
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "comets/network_model.hpp"

namespace comets {

/// Seeded uniform draw inside the level's VMAF range; a pure function of
/// (level, seed, chunk). Throws std::invalid_argument for an unknown level or
/// a level without a range.
double vmaf_for_level(const ResolutionCatalog& catalog, std::string_view level, std::uint64_t seed,
                      std::uint64_t chunk = 0);

/// |D(i-1, i)| = |(R_i - R_{i-1}) - (S_i - S_{i-1})| for consecutive packets.
std::vector<double> transit_deviations(std::span<const double> send, std::span<const double> recv);

/// J(i) = J(i-1) + (|D_i| - J(i-1)) / 16 with J(0) = 0; returns J(1..n).
std::vector<double> rfc3550_jitter(std::span<const double> abs_deviation);

/// (sum x)^2 / (n sum x^2). Throws std::invalid_argument for an empty,
/// negative or all-zero input.
double jain_index(std::span<const double> values);

struct CompositeInputs {
  double vmaf = 0.0;      // all normalized to [0, 1]
  double fairness = 0.0;
  double buffer = 0.0;
  double jitter = 0.0;
  double startup = 0.0;
};

/// 0.4 vmaf + 0.2 fairness + 0.15 buffer + 0.15 (1 - jitter) + 0.1 (1 - startup),
/// clamped below at 0. Throws std::out_of_range when an input leaves [0, 1].
double composite_qoe(const CompositeInputs& in);

double normalize_vmaf(double vmaf);          // vmaf / 100
double normalize_buffer(double buffer_s);    // min(b, 10) / 10
double normalize_jitter(double jitter_ms);   // min(j, 100) / 100
double normalize_startup(double startup_s);  // min(s, 3) / 3

/// Nearest-rank percentile, p in (0, 100]. Empty input gives 0.
double percentile(std::vector<double> values, double p);

struct ChunkArrival {
  std::size_t index = 0;
  double time = 0.0;     // arrival, or the give-up time of a skipped chunk
  bool skipped = false;  // never delivered; the player jumps over it
};

/// Replays a playout buffer from chunk availability times.
struct PlayoutBuffer {
  struct Sample {
    double time = 0.0;
    double level_s = 0.0;
  };

  double startup_time = 0.0;  // absolute time playback starts
  double startup_delay = 0.0; // startup_time - session start
  std::size_t stalls = 0;
  double stall_s = 0.0;
  std::vector<Sample> samples;
  double mean_buffer_s = 0.0;  // over [startup, last arrival]

  static PlayoutBuffer replay(std::span<const ChunkArrival> chunks, double chunk_s,
                              double startup_threshold_s, double session_start,
                              double sample_step_s = 0.5);
};

struct ClientTrace {
  NodeId node = 0;
  std::vector<double> arrival_times;  // ascending
  std::vector<double> send_times;     // request time of the answered Interest
  std::vector<std::size_t> levels;    // delivered level, per arrival
  std::vector<std::size_t> chunk_index;
  std::vector<ChunkArrival> chunks;   // per chunk index, incl. skipped
  double session_start = 0.0;
  std::size_t downgrades = 0;
  bool unserved = false;  // optimizer left it without a level at least once
};

struct ClientMetrics {
  NodeId node = 0;
  std::size_t chunks = 0;
  std::size_t skipped = 0;
  double mean_vmaf = 0.0;
  double p95_vmaf = 0.0;
  double mean_interarrival_ms = 0.0;
  double p95_interarrival_ms = 0.0;
  double jitter_ms = 0.0;
  double startup_s = 0.0;
  double mean_buffer_s = 0.0;
  std::size_t stalls = 0;
  double mean_height = 0.0;
  std::size_t downgrades = 0;
  bool unserved = false;
};

struct MetricsReport {
  std::vector<ClientMetrics> clients;
  double jain = 0.0;
  double composite = 0.0;
  std::size_t unserved = 0;
  double mean_interarrival_ms = 0.0;  // over all clients' gaps
  double mean_vmaf = 0.0;
  double mean_startup_s = 0.0;
  nlohmann::json extra = nlohmann::json::object();  // simulator counters

  nlohmann::json to_json() const;
  void write_client_csv(std::ostream& out) const;
};

MetricsReport compute_metrics(const Scenario& s, std::span<const ClientTrace> traces,
                              std::uint64_t seed);

}  // namespace comets
