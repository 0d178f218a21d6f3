// Discrete-event simulation of adaptive video delivery over a forwarder tree.
//
// Time is in seconds. Every graph edge becomes two FIFO channels (down and
// up) with the edge's capacity and delay; a packet occupies its channel for
// size / capacity and is lost independently with probability loss_rate.
// Events are totally ordered by (time, sequence number), so a run is a pure
// function of (scenario, seed, loss_rate, mode).
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "comets/dual.hpp"
#include "comets/metrics.hpp"

namespace comets::sim {

struct SimOptions {
  DualMode mode = DualMode::Centralized;
  DualOptions optimizer;          // defaults: 500 iterations, eps 1e-4
  bool record_log = true;
  double horizon_factor = 10.0;   // abort after horizon_factor * duration + 60 s
};

struct SimCounters {
  std::uint64_t events = 0;
  std::uint64_t packets_sent = 0;
  std::uint64_t packets_dropped = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t upstream_video_interests = 0;  // forwarded toward the producer
  std::uint64_t aggregated_interests = 0;
  std::uint64_t suppressed_retransmissions = 0;  // held back at a forwarder
  std::uint64_t retransmissions = 0;
  std::uint64_t skipped_chunks = 0;
  std::uint64_t optimizer_runs = 0;
  std::uint64_t recommend_nacks = 0;
  std::uint64_t backpressure_nacks = 0;
  std::uint64_t congestion_nacks = 0;
  std::uint64_t version_nacks = 0;
  std::uint64_t prefetches = 0;
  std::uint64_t state_messages = 0;  // distributed mode multiplier exchange
  std::uint64_t state_bytes = 0;
  std::uint64_t rejected_data = 0;   // failed the authenticity check
  std::map<int, std::pair<std::uint64_t, std::uint64_t>> cache_by_depth;  // hits, lookups
  double end_time = 0.0;
  bool horizon_reached = false;

  nlohmann::json to_json() const;
};

struct SimResult {
  MetricsReport metrics;
  std::vector<ClientTrace> traces;
  SimCounters counters;
  std::string event_log;  // CSV: time,node,kind,name,bytes
};

/// Throws StructuralError for an invalid scenario or one without exactly one
/// server, std::invalid_argument for a non-positive duration.
SimResult run_simulation(const Scenario& s, const SimOptions& opts = {});

/// Scenario restricted to the given users (with replacement profiles); node
/// ids are renumbered densely. `mapping[new_id] = old_id`.
Scenario restrict_users(const Scenario& s, const std::vector<UserProfile>& active,
                        std::vector<NodeId>& mapping);

}  // namespace comets::sim
