// Partial Lagrangian dual of the QoE program.
//
// The per-node "acquire before forward" constraints are relaxed:
//   lambda1[i][l] >= 0 on  x[i][l] <= sum_{j -> i} y[(j,i)][l]   (i forwarder or user)
//   lambda2[e][l] >= 0 on  y[e][l] <= x[from(e)][l]               (from(e) a forwarder)
// which leaves four independent families of subproblems: server edges and
// forwarder edges (continuous knapsacks), users (argmax over supported
// levels) and forwarder selections (sign test).
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "comets/milp.hpp"

namespace comets {

struct DualState {
  LevelMatrix<NodeRowsTag> lambda1;  // node x level; server rows unused
  LevelMatrix<EdgeRowsTag> lambda2;  // edge x level; only forwarder-tail edges used

  static DualState zeros(const Scenario& s);
  bool operator==(const DualState&) const = default;
};

class StepSchedule {
 public:
  /// Throws std::invalid_argument unless both bases are positive.
  StepSchedule(double alpha0 = 1.0, double beta0 = 1.0);
  double alpha(std::size_t t) const { return alpha0_ / static_cast<double>(t); }
  double beta(std::size_t t) const { return beta0_ / static_cast<double>(t); }
  double alpha0() const { return alpha0_; }
  double beta0() const { return beta0_; }

 private:
  double alpha0_;
  double beta0_;
};

class InternalConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// --- subproblem solvers --------------------------------------------------

/// Greedy fractional knapsack: maximize sum coef*y s.t. sum B*y <= C, y in
/// [0,1]. Only positive coefficients are packed, by descending coef/B with
/// ties on ascending index. Throws std::invalid_argument on B <= 0 or C <= 0.
std::vector<double> solve_knapsack(std::span<const double> coef, std::span<const double> B,
                                   double capacity);

/// True when the knapsack LP has no other optimum than `y`.
bool knapsack_unique(std::span<const double> coef, std::span<const double> B, double capacity,
                     std::span<const double> y);

std::vector<double> solve_server_edge(std::span<const double> lambda1_down,
                                      std::span<const double> B, double capacity);

std::vector<double> solve_forwarder_edge(std::span<const double> lambda1_down,
                                         std::span<const double> lambda2_edge,
                                         std::span<const double> B, double capacity);

/// One-hot over `supported` maximizing w*Q - lambda1, ties to the lowest
/// index. Throws std::invalid_argument when `supported` is empty.
std::vector<double> solve_user(double weight, std::span<const double> Q,
                               std::span<const double> lambda1,
                               std::span<const std::size_t> supported);

/// `lambda2_sum[l]` is the sum of lambda2 over the forwarder's outgoing edges.
std::vector<double> solve_forwarder_selection(std::span<const double> lambda1,
                                              std::span<const double> lambda2_sum);

// --- dual function -------------------------------------------------------

struct Subgradients {
  LevelMatrix<NodeRowsTag> d1;
  LevelMatrix<EdgeRowsTag> d2;
};

/// Maximizers of the Lagrangian at `lambda`.
struct Maximizers {
  SelectionState x;
  TransmissionState y;
  bool unique = true;  // every subproblem optimum is unique
};

Maximizers solve_subproblems(const Scenario& s, const DualState& lambda);

/// d1 = sum_in y - x (forwarders, users); d2 = x[from] - y (forwarder-tail
/// edges). Throws std::invalid_argument on shape mismatch.
Subgradients subgradients(const Scenario& s, const SelectionState& x, const TransmissionState& y);

/// lambda' = max(0, lambda - step * d); alpha for lambda1, beta for lambda2.
DualState update_multipliers(const DualState& lambda, const Subgradients& d, double alpha,
                             double beta);

/// Sum of the four subproblem-group optima.
double dual_value_groups(const Scenario& s, const DualState& lambda, const SelectionState& x,
                         const TransmissionState& y);
/// Lagrangian evaluated at (x, y, lambda) term by term.
double lagrangian(const Scenario& s, const DualState& lambda, const SelectionState& x,
                  const TransmissionState& y);

/// Both evaluations above; throws InternalConsistencyError when they
/// disagree by more than 1e-9 * max(1, |g|).
double dual_value(const Scenario& s, const DualState& lambda, const SelectionState& x,
                  const TransmissionState& y);

// --- iteration driver ----------------------------------------------------

enum class DualMode { Centralized, Distributed };
std::string_view to_string(DualMode m);
std::optional<DualMode> parse_mode(std::string_view text);

struct DualOptions {
  StepSchedule steps;
  std::size_t t_max = 500;
  double eps = 1e-4;
  DualMode mode = DualMode::Centralized;
  std::optional<DualState> warm_start;
  bool keep_iterates = true;  // store x, y for every row
};

struct IterationRecord {
  std::size_t t = 0;
  double g = 0.0;       // dual value at the multipliers used in this round
  double change = 0.0;  // sup-norm of the multiplier update
  double wall_ms = 0.0;
  bool unique = true;
  SelectionState x;
  TransmissionState y;
};

struct MessageStats {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
};

struct IterationTrace {
  std::vector<IterationRecord> rows;
  DualState final_state;
  bool converged = false;  // stopped on the eps rule rather than t_max
  MessageStats traffic;     // distributed mode only

  double best_bound() const;
  /// Columns: t,g,change and, with wall_clock, wall_ms.
  void write_csv(std::ostream& out, bool wall_clock = false) const;
};

/// Runs projected subgradient descent from lambda = 0 (or the warm start).
/// Throws StructuralError for an invalid scenario.
IterationTrace run(const Scenario& s, const DualOptions& opts);

}  // namespace comets
