#include "comets/network_model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace comets {

ResolutionCatalog::ResolutionCatalog(std::vector<ResolutionLevel> levels,
                                     double a, double b)
    : levels_(std::move(levels)), a_(a), b_(b) {
  bandwidths_.reserve(levels_.size());
  qualities_.reserve(levels_.size());
  for (const auto& lv : levels_) bandwidths_.push_back(lv.bandwidth_mbps);
  for (std::size_t l = 0; l < levels_.size(); ++l)
    qualities_.push_back(quality(*this, l));
}

ResolutionCatalog ResolutionCatalog::default_ladder() {
  return ResolutionCatalog({
      {"480p", 480, 1.5, VmafRange{50, 75}},
      {"720p", 720, 3.0, VmafRange{57.5, 80}},
      {"1080p", 1080, 6.0, VmafRange{65, 85}},
      {"1440p", 1440, 12.0, VmafRange{70, 85}},
      {"2160p", 2160, 25.0, VmafRange{80, 95}},
      {"4320p", 4320, 80.0, VmafRange{95, 98}},
  });
}

std::optional<std::size_t> ResolutionCatalog::find(std::string_view name) const {
  for (std::size_t l = 0; l < levels_.size(); ++l)
    if (levels_[l].name == name) return l;
  return std::nullopt;
}

double quality(const ResolutionCatalog& catalog, std::size_t level) {
  if (level >= catalog.size())
    throw std::out_of_range("resolution level " + std::to_string(level + 1) +
                            " outside 1.." + std::to_string(catalog.size()));
  const double r1 = catalog.level(0).height;
  const double rl = catalog.level(level).height;
  return catalog.a() + catalog.b() * std::log(rl / r1);
}

std::string_view to_string(NodeRole role) {
  switch (role) {
    case NodeRole::Server: return "server";
    case NodeRole::Forwarder: return "forwarder";
    case NodeRole::User: return "user";
  }
  return "?";
}

std::optional<NodeRole> parse_role(std::string_view text) {
  if (text == "server") return NodeRole::Server;
  if (text == "forwarder") return NodeRole::Forwarder;
  if (text == "user") return NodeRole::User;
  return std::nullopt;
}

NetworkGraph::NetworkGraph(std::vector<NodeRole> roles, std::vector<Edge> edges)
    : roles_(std::move(roles)), edges_(std::move(edges)) {
  in_.resize(roles_.size());
  out_.resize(roles_.size());
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    if (ed.from >= roles_.size() || ed.to >= roles_.size())
      throw StructuralError("edge " + std::to_string(e) +
                            " references an unknown node");
    out_[ed.from].push_back(e);
    in_[ed.to].push_back(e);
  }
}

std::vector<NodeId> NetworkGraph::upstream(NodeId n) const {
  std::vector<NodeId> r;
  for (EdgeId e : in_edges(n)) r.push_back(edges_[e].from);
  return r;
}

std::vector<NodeId> NetworkGraph::downstream(NodeId n) const {
  std::vector<NodeId> r;
  for (EdgeId e : out_edges(n)) r.push_back(edges_[e].to);
  return r;
}

std::optional<EdgeId> NetworkGraph::find_edge(NodeId from, NodeId to) const {
  if (from >= out_.size()) return std::nullopt;
  for (EdgeId e : out_[from])
    if (edges_[e].to == to) return e;
  return std::nullopt;
}

std::vector<NodeId> NetworkGraph::nodes_with_role(NodeRole role) const {
  std::vector<NodeId> r;
  for (NodeId n = 0; n < roles_.size(); ++n)
    if (roles_[n] == role) r.push_back(n);
  return r;
}

const UserProfile* Scenario::profile(NodeId node) const {
  for (const auto& u : users)
    if (u.node == node) return &u;
  return nullptr;
}

std::size_t ValidationReport::count(std::string_view code) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(),
      [&](const Violation& v) { return v.code == code; }));
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.code << ": " << v.message << '\n';
  return os.str();
}

namespace {

bool has_cycle(const NetworkGraph& g) {
  std::vector<int> indeg(g.node_count(), 0);
  for (const auto& e : g.edges()) ++indeg[e.to];
  std::vector<NodeId> stack;
  for (NodeId n = 0; n < g.node_count(); ++n)
    if (indeg[n] == 0) stack.push_back(n);
  std::size_t seen = 0;
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    ++seen;
    for (EdgeId e : g.out_edges(n))
      if (--indeg[g.edge(e).to] == 0) stack.push_back(g.edge(e).to);
  }
  return seen != g.node_count();
}

void check_catalog(const ResolutionCatalog& cat, std::vector<Violation>& out) {
  if (cat.size() == 0) {
    out.push_back({"catalog_empty", "catalog has no resolution levels", {}, {}, {}});
    return;
  }
  for (std::size_t l = 0; l < cat.size(); ++l) {
    const auto& lv = cat.level(l);
    const std::string at = " at level " + std::to_string(l + 1);
    if (!(lv.bandwidth_mbps > 0))
      out.push_back({"bandwidth_nonpositive", "bandwidth must be > 0" + at, {}, {}, l});
    if (!(lv.height > 0))
      out.push_back({"height_nonpositive", "pixel height must be > 0" + at, {}, {}, l});
    if (l > 0 && !(lv.bandwidth_mbps > cat.level(l - 1).bandwidth_mbps))
      out.push_back({"bandwidth_not_increasing",
                     "bandwidth not strictly increasing" + at, {}, {}, l});
    if (l > 0 && !(lv.height > cat.level(l - 1).height))
      out.push_back({"height_not_increasing",
                     "pixel height not strictly increasing" + at, {}, {}, l});
    if (lv.vmaf && !(lv.vmaf->lo <= lv.vmaf->hi))
      out.push_back({"vmaf_range_invalid", "vmaf range lo > hi" + at, {}, {}, l});
  }
}

void check_graph(const NetworkGraph& g, std::vector<Violation>& out) {
  if (g.nodes_with_role(NodeRole::Server).empty())
    out.push_back({"no_server", "graph has no server node", {}, {}, {}});

  std::set<std::pair<NodeId, NodeId>> seen;
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto& ed = g.edge(e);
    if (!(ed.capacity_mbps > 0))
      out.push_back({"capacity_nonpositive", "edge capacity must be > 0", {}, e, {}});
    if (!(ed.delay_s >= 0))
      out.push_back({"delay_negative", "edge delay must be >= 0", {}, e, {}});
    if (ed.from == ed.to)
      out.push_back({"self_loop", "edge is a self loop", ed.from, e, {}});
    if (!seen.insert({ed.from, ed.to}).second)
      out.push_back({"duplicate_edge", "duplicate edge", ed.from, e, {}});
    if (g.role(ed.to) == NodeRole::Server)
      out.push_back({"server_incoming", "server has incoming edge", ed.to, e, {}});
    if (g.role(ed.from) == NodeRole::User)
      out.push_back({"user_outgoing", "user has outgoing edge", ed.from, e, {}});
  }

  if (has_cycle(g))
    out.push_back({"cycle", "graph not acyclic", {}, {}, {}});

  std::vector<char> reach(g.node_count(), 0);
  std::queue<NodeId> q;
  for (NodeId s : g.nodes_with_role(NodeRole::Server)) {
    reach[s] = 1;
    q.push(s);
  }
  while (!q.empty()) {
    NodeId n = q.front();
    q.pop();
    for (EdgeId e : g.out_edges(n)) {
      NodeId m = g.edge(e).to;
      if (!reach[m]) {
        reach[m] = 1;
        q.push(m);
      }
    }
  }
  for (NodeId n = 0; n < g.node_count(); ++n)
    if (!reach[n])
      out.push_back({"unreachable", "node not reachable from any server", n, {}, {}});
}

void check_users(const Scenario& s, std::vector<Violation>& out) {
  const auto& g = s.graph;
  const std::size_t L = s.catalog.size();
  std::vector<int> profiles(g.node_count(), 0);
  for (const auto& u : s.users) {
    if (u.node >= g.node_count()) {
      out.push_back({"profile_unknown_node", "profile references unknown node", u.node, {}, {}});
      continue;
    }
    if (g.role(u.node) != NodeRole::User)
      out.push_back({"profile_not_user", "profile attached to non-user node", u.node, {}, {}});
    ++profiles[u.node];
    if (u.supported_levels.empty())
      out.push_back({"empty_levels", "user supports no levels", u.node, {}, {}});
    for (std::size_t l : u.supported_levels)
      if (l >= L)
        out.push_back({"level_out_of_range", "supported level exceeds L", u.node, {}, l});
    if (!(u.weight > 0))
      out.push_back({"weight_nonpositive", "user weight must be > 0", u.node, {}, {}});
  }
  for (NodeId n = 0; n < g.node_count(); ++n) {
    if (g.role(n) != NodeRole::User) continue;
    if (profiles[n] == 0)
      out.push_back({"missing_profile", "user node has no profile", n, {}, {}});
    else if (profiles[n] > 1)
      out.push_back({"duplicate_profile", "user node has several profiles", n, {}, {}});
  }
}

void check_sim(const SimParams& p, std::vector<Violation>& out) {
  auto bad = [&](const char* code, const char* msg) {
    out.push_back({code, msg, {}, {}, {}});
  };
  if (!(p.duration_s > 0)) bad("sim_duration", "duration must be > 0");
  if (!(p.interval_s > 0)) bad("sim_interval", "adaptation interval must be > 0");
  if (!(p.chunk_s > 0)) bad("sim_chunk", "chunk duration must be > 0");
  if (!(p.loss_rate >= 0 && p.loss_rate < 1)) bad("sim_loss", "loss rate must be in [0,1)");
  if (p.aimd.min_window < 1 || p.aimd.max_window < p.aimd.min_window ||
      p.aimd.initial_window < p.aimd.min_window ||
      p.aimd.initial_window > p.aimd.max_window)
    bad("sim_aimd", "AIMD windows must satisfy 1 <= min <= initial <= max");
  if (!(p.aimd.decrease_factor > 0 && p.aimd.decrease_factor < 1))
    bad("sim_aimd_factor", "AIMD decrease factor must be in (0,1)");
  if (!(p.pit_lifetime_s > 0)) bad("sim_pit_lifetime", "PIT lifetime must be > 0");
  if (!(p.buffer_target_s >= p.chunk_s)) bad("sim_buffer", "buffer target below one chunk");
}

}  // namespace

ValidationReport validate(const Scenario& scenario) {
  ValidationReport r;
  check_catalog(scenario.catalog, r.violations);
  check_graph(scenario.graph, r.violations);
  check_users(scenario, r.violations);
  check_sim(scenario.sim, r.violations);
  return r;
}

void require_valid(const Scenario& scenario) {
  auto report = validate(scenario);
  if (!report.ok()) throw StructuralError("invalid scenario:\n" + report.summary());
}

std::vector<NodeId> topological_order(const NetworkGraph& g) {
  std::vector<int> indeg(g.node_count(), 0);
  for (const auto& e : g.edges()) ++indeg[e.to];
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId n = 0; n < g.node_count(); ++n)
    if (indeg[n] == 0) ready.push(n);
  std::vector<NodeId> order;
  order.reserve(g.node_count());
  while (!ready.empty()) {
    NodeId n = ready.top();
    ready.pop();
    order.push_back(n);
    for (EdgeId e : g.out_edges(n))
      if (--indeg[g.edge(e).to] == 0) ready.push(g.edge(e).to);
  }
  if (order.size() != g.node_count())
    throw StructuralError("graph contains a directed cycle");
  return order;
}

std::vector<int> compute_depths(const NetworkGraph& g) {
  std::vector<int> depth(g.node_count(), 0);
  for (NodeId n : topological_order(g))
    for (EdgeId e : g.out_edges(n)) {
      NodeId m = g.edge(e).to;
      depth[m] = std::max(depth[m], depth[n] + 1);
    }
  return depth;
}

}  // namespace comets
