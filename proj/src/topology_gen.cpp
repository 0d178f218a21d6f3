#include "comets/topology_gen.hpp"

#include <algorithm>
#include <random>

namespace comets {

Scenario random_tree(const RandomTreeOptions& opts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cap(opts.capacity_min, opts.capacity_max);
  std::uniform_real_distribution<double> weight(opts.weight_min, opts.weight_max);
  const std::size_t L = opts.catalog.size();

  std::vector<NodeRole> roles{NodeRole::Server};
  for (std::size_t f = 0; f < opts.forwarders; ++f) roles.push_back(NodeRole::Forwarder);
  for (std::size_t u = 0; u < opts.users; ++u) roles.push_back(NodeRole::User);

  std::vector<Edge> edges;
  for (std::size_t f = 0; f < opts.forwarders; ++f) {
    const NodeId me = static_cast<NodeId>(1 + f);
    std::uniform_int_distribution<NodeId> parent(0, me - 1);
    edges.push_back({parent(rng), me, cap(rng), 0.005});
  }
  const NodeId first_parent = (opts.users_on_server || opts.forwarders == 0) ? 0 : 1;
  const NodeId last_parent = static_cast<NodeId>(opts.forwarders);
  for (std::size_t u = 0; u < opts.users; ++u) {
    const NodeId me = static_cast<NodeId>(1 + opts.forwarders + u);
    std::uniform_int_distribution<NodeId> parent(first_parent, last_parent);
    edges.push_back({parent(rng), me, cap(rng), 0.005});
  }

  Scenario s;
  s.catalog = opts.catalog;
  s.graph = NetworkGraph(std::move(roles), std::move(edges));
  std::bernoulli_distribution coin(0.6);
  for (std::size_t u = 0; u < opts.users; ++u) {
    UserProfile p;
    p.node = static_cast<NodeId>(1 + opts.forwarders + u);
    for (std::size_t l = 0; l < L; ++l)
      if (coin(rng)) p.supported_levels.push_back(l);
    if (p.supported_levels.empty())
      p.supported_levels.push_back(std::uniform_int_distribution<std::size_t>(0, L - 1)(rng));
    p.weight = weight(rng);
    s.users.push_back(std::move(p));
  }
  s.sim.seed = seed;
  return s;
}

Scenario layered_tree(const LayeredTreeOptions& opts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(1.0 - opts.capacity_jitter, 1.0);
  std::uniform_real_distribution<double> weight(opts.weight_min, opts.weight_max);
  const std::size_t L = opts.catalog.size();

  std::vector<NodeRole> roles{NodeRole::Server};
  std::vector<Edge> edges;
  std::vector<NodeId> tier{0};
  for (std::size_t fan : opts.fanout) {
    std::vector<NodeId> next;
    for (NodeId parent : tier)
      for (std::size_t c = 0; c < fan; ++c) {
        const NodeId me = static_cast<NodeId>(roles.size());
        roles.push_back(NodeRole::Forwarder);
        edges.push_back({parent, me, opts.backbone_mbps * jitter(rng), opts.delay_s});
        next.push_back(me);
      }
    tier = std::move(next);
  }

  Scenario s;
  std::vector<UserProfile> users;
  const std::size_t lo = std::min(std::max<std::size_t>(opts.min_top_level, 1), L);
  std::uniform_int_distribution<std::size_t> top(lo, L);
  for (std::size_t u = 0; u < opts.users; ++u) {
    const NodeId me = static_cast<NodeId>(roles.size());
    roles.push_back(NodeRole::User);
    edges.push_back({tier[u % tier.size()], me, opts.access_mbps * jitter(rng), opts.delay_s});
    UserProfile p;
    p.node = me;
    const std::size_t k = top(rng);
    for (std::size_t l = 0; l < k; ++l) p.supported_levels.push_back(l);
    p.weight = weight(rng);
    users.push_back(std::move(p));
  }
  s.catalog = opts.catalog;
  s.graph = NetworkGraph(std::move(roles), std::move(edges));
  s.users = std::move(users);
  s.sim.seed = seed;
  return s;
}

Scenario scale_users(const Scenario& base, std::size_t users) {
  const auto& g = base.graph;
  std::vector<NodeId> new_id(g.node_count(), 0);
  std::vector<NodeRole> roles;
  for (NodeId n = 0; n < g.node_count(); ++n) {
    if (g.role(n) == NodeRole::User) continue;
    new_id[n] = static_cast<NodeId>(roles.size());
    roles.push_back(g.role(n));
  }
  std::vector<NodeId> leaves;
  for (NodeId n = 0; n < g.node_count(); ++n) {
    if (g.role(n) != NodeRole::Forwarder) continue;
    const bool leaf = std::none_of(g.out_edges(n).begin(), g.out_edges(n).end(), [&](EdgeId e) {
      return g.role(g.edge(e).to) == NodeRole::Forwarder;
    });
    if (leaf) leaves.push_back(new_id[n]);
  }
  if (leaves.empty()) throw StructuralError("scale_users: base scenario has no forwarder");

  std::vector<Edge> edges;
  for (const auto& e : g.edges())
    if (g.role(e.to) != NodeRole::User) edges.push_back({new_id[e.from], new_id[e.to], e.capacity_mbps, e.delay_s});

  Scenario s;
  s.catalog = base.catalog;
  s.sim = base.sim;
  std::vector<UserProfile> profiles;
  for (std::size_t i = 0; i < users; ++i) {
    const NodeId me = static_cast<NodeId>(roles.size());
    roles.push_back(NodeRole::User);
    Edge access{leaves[i % leaves.size()], me, 100.0, 0.005};
    UserProfile p{me, {}, 1.0};
    if (!base.users.empty()) {
      const UserProfile& src = base.users[i % base.users.size()];
      p.supported_levels = src.supported_levels;
      p.weight = src.weight;
      if (!g.in_edges(src.node).empty()) {
        const Edge& e = g.edge(g.in_edges(src.node).front());
        access.capacity_mbps = e.capacity_mbps;
        access.delay_s = e.delay_s;
      }
    } else {
      for (std::size_t l = 0; l < base.catalog.size(); ++l) p.supported_levels.push_back(l);
    }
    edges.push_back(access);
    profiles.push_back(std::move(p));
  }
  s.graph = NetworkGraph(std::move(roles), std::move(edges));
  s.users = std::move(profiles);
  return s;
}

}  // namespace comets
