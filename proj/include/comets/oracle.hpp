// Brute-force reference solutions for small instances.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include "comets/milp.hpp"

namespace comets {

class OracleLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleLimits {
  std::uint64_t tree_assignments = 1'000'000;  // product of |L_u|
  std::size_t dag_binary_vars = 24;            // |F u U| * L + |E| * L
  std::uint64_t grid_states = 50'000'000;      // knapsack grid / DP cells
};

struct OracleSolution {
  SelectionState x;
  TransmissionState y;
  double z = 0.0;
};

/// True for one server, one incoming edge per other node, everything reachable.
bool is_tree(const Scenario& s);

/// Exact optimum over every user level assignment, each paired with its
/// minimal transmission set. nullopt when no assignment fits the capacities.
/// Throws OracleLimitError for a non-tree or an oversized search.
std::optional<OracleSolution> ilp_optimum_tree(const Scenario& s, const OracleLimits& limits = {});

/// Exact optimum for any DAG by enumerating per-edge level sets within
/// capacity; selections follow from the transmissions.
std::optional<OracleSolution> ilp_optimum_small_dag(const Scenario& s,
                                                    const OracleLimits& limits = {});

/// Best sum values*y over y in {0, step, ..., 1}^L with sum weights*y <=
/// capacity. Exact bounded-knapsack DP when the weights share a decimal
/// quantum, plain enumeration otherwise. Throws OracleLimitError when the
/// grid is too large and std::invalid_argument for a non-positive step.
double knapsack_grid_check(std::span<const double> values, std::span<const double> weights,
                           double capacity, double step, const OracleLimits& limits = {});

}  // namespace comets
