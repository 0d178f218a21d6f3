// Static problem instance: resolution ladder, topology, user profiles and
// simulation parameters, plus structural validation and depth labelling.
//
// Resolution levels are 0-based everywhere in the C++ API (index 0 is the
// lowest level). Scenario files and human-facing output use 1-based levels.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace comets {

using NodeId = std::uint32_t;
using EdgeId = std::size_t;

/// Raised when a structural precondition (acyclicity, index range) fails.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VmafRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct ResolutionLevel {
  std::string name;            // e.g. "1080p"; used in video data names
  double height = 0.0;         // pixel height R_l
  double bandwidth_mbps = 0.0; // B_l
  std::optional<VmafRange> vmaf;
};

class ResolutionCatalog {
 public:
  ResolutionCatalog() = default;
  ResolutionCatalog(std::vector<ResolutionLevel> levels, double a = 1.0,
                    double b = 1.0);

  /// 480p/720p/1080p/1440p/2160p/4320p at 1.5/3/6/12/25/80 Mbps.
  static ResolutionCatalog default_ladder();

  std::size_t size() const { return levels_.size(); }
  const ResolutionLevel& level(std::size_t l) const { return levels_.at(l); }
  const std::vector<ResolutionLevel>& levels() const { return levels_; }
  double a() const { return a_; }
  double b() const { return b_; }

  double bandwidth(std::size_t l) const { return levels_.at(l).bandwidth_mbps; }
  std::span<const double> bandwidths() const { return bandwidths_; }
  std::span<const double> qualities() const { return qualities_; }

  /// Index of the level with the given name, if any.
  std::optional<std::size_t> find(std::string_view name) const;

 private:
  std::vector<ResolutionLevel> levels_;
  double a_ = 1.0;
  double b_ = 1.0;
  std::vector<double> bandwidths_;
  std::vector<double> qualities_;
};

/// Q_l = a + b ln(R_l / R_1). Throws std::out_of_range for a bad level.
double quality(const ResolutionCatalog& catalog, std::size_t level);

enum class NodeRole { Server, Forwarder, User };

std::string_view to_string(NodeRole role);
std::optional<NodeRole> parse_role(std::string_view text);

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  double capacity_mbps = 0.0;
  double delay_s = 0.005;
};

class NetworkGraph {
 public:
  NetworkGraph() = default;
  /// Throws StructuralError if an edge references a node outside `roles`.
  NetworkGraph(std::vector<NodeRole> roles, std::vector<Edge> edges);

  std::size_t node_count() const { return roles_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  NodeRole role(NodeId n) const { return roles_.at(n); }
  const std::vector<NodeRole>& roles() const { return roles_; }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Edge ids entering / leaving a node, ordered by edge id.
  const std::vector<EdgeId>& in_edges(NodeId n) const { return in_.at(n); }
  const std::vector<EdgeId>& out_edges(NodeId n) const { return out_.at(n); }

  std::vector<NodeId> upstream(NodeId n) const;
  std::vector<NodeId> downstream(NodeId n) const;
  std::optional<EdgeId> find_edge(NodeId from, NodeId to) const;
  std::vector<NodeId> nodes_with_role(NodeRole role) const;

 private:
  std::vector<NodeRole> roles_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> in_;
  std::vector<std::vector<EdgeId>> out_;
};

struct UserProfile {
  NodeId node = 0;
  std::vector<std::size_t> supported_levels; // sorted, 0-based
  double weight = 1.0;
};

struct AimdParams {
  int initial_window = 1;
  int min_window = 1;
  int max_window = 64;
  double decrease_factor = 0.5;
};

struct SimParams {
  double duration_s = 60.0;       // video length; simulation runs until done
  double interval_s = 4.0;        // adaptation period T
  double chunk_s = 2.0;
  double loss_rate = 0.0;
  std::uint64_t seed = 1;
  std::size_t cache_capacity = 1000; // entries per forwarder
  AimdParams aimd;
  double backpressure_threshold_s = 0.050;
  double backpressure_cooldown_s = 2.0;
  double pit_lifetime_s = 4.0;
  double min_timeout_s = 0.050;
  double initial_rtt_s = 1.0;
  double buffer_target_s = 10.0;
  double startup_threshold_s = 2.0;
  double collect_window_s = 0.020; // wait for range interests before solving
  double optimizer_delay_s = 0.020;
  std::string title = "title";
};

struct Scenario {
  ResolutionCatalog catalog;
  NetworkGraph graph;
  std::vector<UserProfile> users;
  SimParams sim;

  /// Profile attached to a user node, or nullptr.
  const UserProfile* profile(NodeId node) const;
};

struct Violation {
  std::string code;
  std::string message;
  std::optional<NodeId> node;
  std::optional<EdgeId> edge;
  std::optional<std::size_t> level;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::size_t count(std::string_view code) const;
  std::string summary() const;
};

ValidationReport validate(const Scenario& scenario);

/// Throws StructuralError carrying the report summary if validation fails.
void require_valid(const Scenario& scenario);

/// Longest path length from any source (node without incoming edges).
/// Throws StructuralError on a cycle.
std::vector<int> compute_depths(const NetworkGraph& graph);

/// Kahn order; ties broken by ascending node id. Throws on a cycle.
std::vector<NodeId> topological_order(const NetworkGraph& graph);

}  // namespace comets
