// Round-down plus depth-ordered repair of a relaxed (x, y) into an integral
// feasible point, and the optimize pipeline built on top of it.
#pragma once

#include <vector>

#include <json.hpp>

#include "comets/dual.hpp"

namespace comets {

struct ReconstructionResult {
  SelectionState x;
  TransmissionState y;
  std::vector<NodeId> unserved_users;  // ascending id
  std::vector<NodeId> order;           // processing order, for inspection
};

/// Throws std::invalid_argument on shape mismatch.
ReconstructionResult reconstruct(const Scenario& s, const SelectionState& x,
                                 const TransmissionState& y);

struct OptimizeResult {
  IterationTrace trace;
  ReconstructionResult best;  // best repair over all iterates
  bool feasible = false;      // best serves every user
  std::size_t best_t = 0;
  double z_best = 0.0;
  double dual_bound = 0.0;  // min over iterations of g
  double gap = 0.0;         // (bound - z) / bound, 0 when bound == 0
  bool unique_at_end = false;

  nlohmann::json solution_json(const Scenario& s) const;
  nlohmann::json gap_json() const;
};

OptimizeResult optimize(const Scenario& s, const DualOptions& opts);

}  // namespace comets
