#include "comets/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace comets {

namespace {

constexpr double kCapTol = 1e-9;

std::vector<EdgeId> path_to(const Scenario& s, NodeId n) {
  std::vector<EdgeId> path;
  while (!s.graph.in_edges(n).empty()) {
    const EdgeId e = s.graph.in_edges(n).front();
    path.push_back(e);
    n = s.graph.edge(e).from;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

bool is_tree(const Scenario& s) {
  const auto& g = s.graph;
  if (g.nodes_with_role(NodeRole::Server).size() != 1) return false;
  for (NodeId n = 0; n < g.node_count(); ++n) {
    const std::size_t in = g.in_edges(n).size();
    if (g.role(n) == NodeRole::Server ? in != 0 : in != 1) return false;
  }
  try {
    topological_order(g);
  } catch (const StructuralError&) {
    return false;
  }
  return true;
}

std::optional<OracleSolution> ilp_optimum_tree(const Scenario& s, const OracleLimits& limits) {
  if (!is_tree(s)) throw OracleLimitError("ilp_optimum_tree: topology is not a tree");
  const auto& g = s.graph;
  const std::size_t L = s.catalog.size();
  const auto B = s.catalog.bandwidths();
  const auto Q = s.catalog.qualities();

  double space = 1.0;
  for (const auto& u : s.users) space *= static_cast<double>(u.supported_levels.size());
  if (space > static_cast<double>(limits.tree_assignments))
    throw OracleLimitError("ilp_optimum_tree: " + std::to_string(space) +
                           " assignments exceed the limit");

  std::vector<std::vector<EdgeId>> paths;
  for (const auto& u : s.users) paths.push_back(path_to(s, u.node));

  // refs(e, l): users below e's head currently assigned level l
  std::vector<int> refs(g.edge_count() * L, 0);
  std::vector<double> load(g.edge_count(), 0.0);
  std::vector<std::size_t> pick(s.users.size()), best_pick;
  double best_z = -std::numeric_limits<double>::infinity();

  std::function<void(std::size_t, double)> dfs = [&](std::size_t i, double z) {
    if (i == s.users.size()) {
      if (z > best_z) {
        best_z = z;
        best_pick = pick;
      }
      return;
    }
    const auto& path = paths[i];
    for (std::size_t l : s.users[i].supported_levels) {
      std::size_t added = 0;
      bool fits = true;
      for (; added < path.size(); ++added) {
        const EdgeId e = path[added];
        if (refs[e * L + l]++ == 0) {
          load[e] += B[l];
          if (load[e] > g.edge(e).capacity_mbps + kCapTol) {
            ++added;
            fits = false;
            break;
          }
        }
      }
      if (fits) {
        pick[i] = l;
        dfs(i + 1, z + s.users[i].weight * Q[l]);
      }
      for (std::size_t k = 0; k < added; ++k) {
        const EdgeId e = path[k];
        if (--refs[e * L + l] == 0) load[e] -= B[l];
      }
    }
  };
  dfs(0, 0.0);
  if (best_pick.size() != s.users.size() && !s.users.empty()) return std::nullopt;

  OracleSolution sol{make_selection(s), make_transmission(s), 0.0};
  for (NodeId n : g.nodes_with_role(NodeRole::Server))
    std::fill(sol.x.row(n).begin(), sol.x.row(n).end(), 1.0);
  for (std::size_t i = 0; i < s.users.size(); ++i) {
    const std::size_t l = best_pick[i];
    sol.x(s.users[i].node, l) = 1.0;
    for (EdgeId e : paths[i]) {
      sol.y(e, l) = 1.0;
      sol.x(g.edge(e).to, l) = 1.0;
    }
  }
  sol.z = objective(s, sol.x);
  return sol;
}

std::optional<OracleSolution> ilp_optimum_small_dag(const Scenario& s,
                                                    const OracleLimits& limits) {
  const auto& g = s.graph;
  const std::size_t L = s.catalog.size();
  const auto B = s.catalog.bandwidths();
  const auto Q = s.catalog.qualities();
  const std::size_t non_servers = g.node_count() - g.nodes_with_role(NodeRole::Server).size();
  const std::size_t vars = non_servers * L + g.edge_count() * L;
  if (vars > limits.dag_binary_vars)
    throw OracleLimitError("ilp_optimum_small_dag: " + std::to_string(vars) +
                           " binary variables exceed the limit");
  const auto order = topological_order(g);

  // Level subsets each edge can carry on its own.
  std::vector<std::vector<unsigned>> masks(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e)
    for (unsigned m = 0; m < (1u << L); ++m) {
      double w = 0.0;
      for (std::size_t l = 0; l < L; ++l)
        if (m >> l & 1u) w += B[l];
      if (w <= g.edge(e).capacity_mbps + kCapTol) masks[e].push_back(m);
    }

  std::vector<unsigned> y_mask(g.edge_count(), 0), best_mask;
  std::vector<std::size_t> user_pick(g.node_count()), best_user;
  double best_z = -std::numeric_limits<double>::infinity();

  auto evaluate = [&]() {
    // Largest feasible selection per node: x = OR of incoming levels.
    std::vector<unsigned> have(g.node_count(), 0);
    double z = 0.0;
    for (NodeId n : order) {
      unsigned in = 0;
      for (EdgeId e : g.in_edges(n)) in |= y_mask[e];
      switch (g.role(n)) {
        case NodeRole::Server: have[n] = (1u << L) - 1; break;
        case NodeRole::Forwarder: have[n] = in; break;
        case NodeRole::User: {
          const UserProfile* p = s.profile(n);
          if (!p) return;
          std::optional<std::size_t> pick;
          for (std::size_t l : p->supported_levels)
            if ((in >> l & 1u) && (!pick || p->weight * Q[l] > p->weight * Q[*pick])) pick = l;
          if (!pick) return;
          user_pick[n] = *pick;
          z += p->weight * Q[*pick];
          have[n] = 1u << *pick;
          break;
        }
      }
      for (EdgeId e : g.out_edges(n))
        if (y_mask[e] & ~have[n]) return;
    }
    if (z > best_z) {
      best_z = z;
      best_mask = y_mask;
      best_user = user_pick;
    }
  };

  std::function<void(EdgeId)> dfs = [&](EdgeId e) {
    if (e == g.edge_count()) {
      evaluate();
      return;
    }
    for (unsigned m : masks[e]) {
      y_mask[e] = m;
      dfs(e + 1);
    }
    y_mask[e] = 0;
  };
  dfs(0);
  if (!std::isfinite(best_z)) return std::nullopt;

  OracleSolution sol{make_selection(s), make_transmission(s), 0.0};
  for (NodeId n : order) {
    unsigned in = 0;
    for (EdgeId e : g.in_edges(n)) in |= best_mask[e];
    for (std::size_t l = 0; l < L; ++l) {
      switch (g.role(n)) {
        case NodeRole::Server: sol.x(n, l) = 1.0; break;
        case NodeRole::Forwarder: sol.x(n, l) = (in >> l & 1u) ? 1.0 : 0.0; break;
        case NodeRole::User: sol.x(n, l) = l == best_user[n] ? 1.0 : 0.0; break;
      }
    }
  }
  for (EdgeId e = 0; e < g.edge_count(); ++e)
    for (std::size_t l = 0; l < L; ++l) sol.y(e, l) = (best_mask[e] >> l & 1u) ? 1.0 : 0.0;
  sol.z = objective(s, sol.x);
  return sol;
}

namespace {

std::optional<double> common_quantum(std::span<const double> weights) {
  for (double q : {1.0, 0.5, 0.25, 0.2, 0.1, 0.05, 0.01}) {
    bool ok = true;
    for (double w : weights) {
      const double k = w / q;
      ok = ok && std::abs(k - std::round(k)) < 1e-9 && std::round(k) >= 1.0;
    }
    if (ok) return q;
  }
  return std::nullopt;
}

// max sum v_i k_i  s.t. sum w_i k_i <= W, 0 <= k_i <= n; monotone-queue DP.
double bounded_knapsack(const std::vector<double>& v, const std::vector<long>& w, long n, long W) {
  std::vector<double> prev(W + 1, 0.0), cur(W + 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const long wi = w[i];
    for (long r = 0; r < wi && r <= W; ++r) {
      std::deque<std::pair<long, double>> q;  // (j, prev[r + j wi] - j v)
      for (long j = 0; r + j * wi <= W; ++j) {
        const double key = prev[r + j * wi] - static_cast<double>(j) * v[i];
        while (!q.empty() && q.back().second <= key) q.pop_back();
        q.emplace_back(j, key);
        while (q.front().first < j - n) q.pop_front();
        cur[r + j * wi] = q.front().second + static_cast<double>(j) * v[i];
      }
    }
    std::swap(prev, cur);
  }
  return prev[W];
}

}  // namespace

double knapsack_grid_check(std::span<const double> values, std::span<const double> weights,
                           double capacity, double step, const OracleLimits& limits) {
  if (!(step > 0.0) || step > 1.0) throw std::invalid_argument("knapsack_grid_check: bad step");
  if (values.size() != weights.size())
    throw std::invalid_argument("knapsack_grid_check: size mismatch");
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("knapsack_grid_check: weights must be > 0");
  const long n = std::lround(1.0 / step);
  if (capacity < 0.0) return 0.0;

  // Items with non-positive value never improve a solution.
  std::vector<double> v;
  std::vector<double> w;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > 0.0) {
      v.push_back(values[i]);
      w.push_back(weights[i]);
    }
  if (v.empty()) return 0.0;

  if (auto q = common_quantum(w)) {
    const long W = static_cast<long>(std::floor(capacity / (*q * step) + 1e-9));
    if (static_cast<double>(W + 1) * static_cast<double>(v.size()) <=
        static_cast<double>(limits.grid_states)) {
      std::vector<long> wi;
      for (double x : w) wi.push_back(std::lround(x / *q));
      return bounded_knapsack(v, wi, n, W) * step;
    }
  }

  const double states = std::pow(static_cast<double>(n + 1), static_cast<double>(v.size()));
  if (states > static_cast<double>(limits.grid_states))
    throw OracleLimitError("knapsack_grid_check: grid too large");
  std::vector<long> k(v.size(), 0);
  double best = 0.0;
  for (;;) {
    double wt = 0.0, val = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      wt += w[i] * static_cast<double>(k[i]) * step;
      val += v[i] * static_cast<double>(k[i]) * step;
    }
    if (wt <= capacity + 1e-9) best = std::max(best, val);
    std::size_t i = 0;
    while (i < k.size() && ++k[i] > n) k[i++] = 0;
    if (i == k.size()) break;
  }
  return best;
}

}  // namespace comets
