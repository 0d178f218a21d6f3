#include "comets/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace comets {

ReconstructionResult reconstruct(const Scenario& s, const SelectionState& x,
                                 const TransmissionState& y) {
  const auto& g = s.graph;
  const std::size_t L = s.catalog.size();
  if (x.rows() != g.node_count() || x.levels() != L || y.rows() != g.edge_count() ||
      y.levels() != L)
    throw std::invalid_argument("reconstruct: state shapes do not match the scenario");

  ReconstructionResult r{make_selection(s), make_transmission(s), {}, {}};
  for (std::size_t i = 0; i < y.values().size(); ++i)
    r.y.values()[i] = std::floor(y.values()[i]);

  const auto depth = compute_depths(g);
  r.order.resize(g.node_count());
  std::iota(r.order.begin(), r.order.end(), NodeId{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](NodeId a, NodeId b) { return depth[a] < depth[b]; });

  const auto Q = s.catalog.qualities();
  for (NodeId n : r.order) {
    switch (g.role(n)) {
      case NodeRole::Server:
        std::fill(r.x.row(n).begin(), r.x.row(n).end(), 1.0);
        break;
      case NodeRole::Forwarder:
        for (std::size_t l = 0; l < L; ++l) {
          double in = 0.0;
          for (EdgeId e : g.in_edges(n)) in += r.y(e, l);
          r.x(n, l) = std::min(1.0, in);
        }
        break;
      case NodeRole::User: {
        const UserProfile* p = s.profile(n);
        std::optional<std::size_t> pick;
        if (p)
          for (std::size_t l : p->supported_levels) {
            bool available = false;
            for (EdgeId e : g.in_edges(n)) available = available || r.y(e, l) > 0.0;
            if (available && (!pick || Q[l] >= Q[*pick])) pick = l;
          }
        if (pick)
          r.x(n, *pick) = 1.0;
        else
          r.unserved_users.push_back(n);
        break;
      }
    }
    for (EdgeId e : g.out_edges(n))
      for (std::size_t l = 0; l < L; ++l) r.y(e, l) = std::min(r.y(e, l), r.x(n, l));
  }
  std::sort(r.unserved_users.begin(), r.unserved_users.end());
  return r;
}

OptimizeResult optimize(const Scenario& s, const DualOptions& opts) {
  DualOptions o = opts;
  o.keep_iterates = true;
  OptimizeResult res;
  res.trace = run(s, o);
  // Incumbent: fewest unserved users first, then highest objective.
  bool have = false;
  for (const auto& row : res.trace.rows) {
    auto rec = reconstruct(s, row.x, row.y);
    const double z = objective(s, rec.x);
    const std::size_t unserved = rec.unserved_users.size();
    const std::size_t best_unserved = res.best.unserved_users.size();
    if (!have || unserved < best_unserved || (unserved == best_unserved && z > res.z_best)) {
      res.best = std::move(rec);
      res.z_best = z;
      res.best_t = row.t;
      have = true;
    }
  }
  res.feasible = have && res.best.unserved_users.empty();
  res.dual_bound = res.trace.best_bound();
  res.gap = res.dual_bound > 0.0 ? (res.dual_bound - res.z_best) / res.dual_bound : 0.0;
  res.unique_at_end = !res.trace.rows.empty() && res.trace.rows.back().unique;
  if (!opts.keep_iterates)
    for (auto& row : res.trace.rows) row.x = {}, row.y = {};
  return res;
}

namespace {

nlohmann::json matrix_rows(const auto& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

}  // namespace

nlohmann::json OptimizeResult::solution_json(const Scenario& s) const {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : s.users) {
    nlohmann::json entry = {{"node", u.node}};
    std::optional<std::size_t> level;
    for (std::size_t l = 0; l < s.catalog.size(); ++l)
      if (best.x(u.node, l) == 1.0) level = l;
    if (level) {
      entry["level"] = *level + 1;
      entry["name"] = s.catalog.level(*level).name;
    } else {
      entry["level"] = nullptr;
    }
    users.push_back(std::move(entry));
  }
  return {{"objective", z_best},
          {"iteration", best_t},
          {"users", users},
          {"unserved_users", best.unserved_users},
          {"x", matrix_rows(best.x)},
          {"y", matrix_rows(best.y)},
          {"constraints", check(s, best.x, best.y, true).to_json()}};
}

nlohmann::json OptimizeResult::gap_json() const {
  const double final_dual = trace.rows.empty() ? 0.0 : trace.rows.back().g;
  return {{"dual_bound", dual_bound},
          {"final_dual", final_dual},
          {"gap_final", final_dual > 0.0 ? (final_dual - z_best) / final_dual : 0.0},
          {"primal", z_best},
          {"gap", gap},
          {"feasible", feasible},
          {"iterations", trace.rows.size()},
          {"converged", trace.converged},
          {"unique_subproblems", unique_at_end},
          {"messages", trace.traffic.messages},
          {"message_bytes", trace.traffic.bytes}};
}

}  // namespace comets
