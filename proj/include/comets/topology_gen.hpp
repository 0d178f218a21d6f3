// Seeded scenario generators: small random trees for oracle-sized checks and
// layered CDN-style trees (server -> forwarder tiers -> users) for scaling runs.
#pragma once

#include <cstdint>
#include <vector>

#include "comets/network_model.hpp"

namespace comets {

struct RandomTreeOptions {
  std::size_t forwarders = 3;
  std::size_t users = 5;
  ResolutionCatalog catalog = ResolutionCatalog::default_ladder();
  double capacity_min = 2.0;
  double capacity_max = 20.0;
  double weight_min = 1.0;
  double weight_max = 3.0;
  bool users_on_server = false;  // allow server -> user edges
};

/// One server; each forwarder hangs below the server or an earlier forwarder,
/// each user below a forwarder. Capacities and weights are uniform draws and
/// every user supports a random nonempty subset of levels.
Scenario random_tree(const RandomTreeOptions& opts, std::uint64_t seed);

struct LayeredTreeOptions {
  std::vector<std::size_t> fanout = {3, 3};  // children per node, per tier
  std::size_t users = 100;
  ResolutionCatalog catalog = ResolutionCatalog::default_ladder();
  double backbone_mbps = 400.0;
  double access_mbps = 100.0;
  double delay_s = 0.005;
  double capacity_jitter = 0.0;  // capacities scaled by U[1-j, 1]
  std::size_t min_top_level = 3; // users support levels 1..k, k >= this
  double weight_min = 1.0;
  double weight_max = 2.0;
};

/// Fixed-shape tree; users are attached round-robin to the leaf forwarders.
Scenario layered_tree(const LayeredTreeOptions& opts, std::uint64_t seed);

/// Same servers and forwarders as `base` with its users replaced by `users`
/// new ones attached round-robin to the leaf forwarders. User i copies the
/// access edge and profile of base user i mod k (all levels, 100 Mbps, 5 ms
/// when base has none). Throws StructuralError when base has no forwarder.
Scenario scale_users(const Scenario& base, std::size_t users);

}  // namespace comets
