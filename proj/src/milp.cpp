#include "comets/milp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace comets {

SelectionState make_selection(const Scenario& s) {
  return SelectionState(s.graph.node_count(), s.catalog.size());
}

TransmissionState make_transmission(const Scenario& s) {
  return TransmissionState(s.graph.edge_count(), s.catalog.size());
}

std::string_view to_string(ConstraintFamily f) {
  switch (f) {
    case ConstraintFamily::Srv: return "C-SRV";
    case ConstraintFamily::CapUsr: return "C-CAP-USR";
    case ConstraintFamily::One: return "C-ONE";
    case ConstraintFamily::FwdOut: return "C-FWD-OUT";
    case ConstraintFamily::FwdIn: return "C-FWD-IN";
    case ConstraintFamily::Bw: return "C-BW";
    case ConstraintFamily::Int: return "C-INT";
  }
  return "?";
}

bool ConstraintReport::empty() const { return total() == 0; }

std::size_t ConstraintReport::total() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.size();
  return n;
}

double ConstraintReport::max_residual() const {
  double m = 0.0;
  for (const auto& fam : entries_)
    for (const auto& r : fam) m = std::max(m, r.residual);
  return m;
}

nlohmann::json ConstraintReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (ConstraintFamily f : kAllFamilies) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : entries(f)) {
      nlohmann::json item = {{"residual", r.residual}};
      if (r.node) item["node"] = *r.node;
      if (r.edge) item["edge"] = *r.edge;
      if (r.level) item["level"] = *r.level + 1;
      list.push_back(std::move(item));
    }
    j[std::string(to_string(f))] = std::move(list);
  }
  return j;
}

double objective(const Scenario& s, const SelectionState& x) {
  if (x.rows() < s.graph.node_count() || x.levels() != s.catalog.size())
    throw std::invalid_argument("objective: selection matrix does not cover every node");
  const auto q = s.catalog.qualities();
  double z = 0.0;
  for (const auto& u : s.users) {
    double row = 0.0;
    for (std::size_t l = 0; l < q.size(); ++l) row += q[l] * x(u.node, l);
    z += u.weight * row;
  }
  return z;
}

ConstraintReport check(const Scenario& s, const SelectionState& x,
                       const TransmissionState& y, bool integral) {
  const auto& g = s.graph;
  const std::size_t L = s.catalog.size();
  if (x.rows() != g.node_count() || x.levels() != L || y.rows() != g.edge_count() ||
      y.levels() != L)
    throw std::invalid_argument("check: state shapes do not match the scenario");

  ConstraintReport rep;
  auto put = [&](ConstraintFamily f, double residual, std::optional<NodeId> n,
                 std::optional<EdgeId> e, std::optional<std::size_t> l) {
    if (residual > kFeasibilityTol) rep.add(f, Residual{n, e, l, residual});
  };

  for (NodeId n = 0; n < g.node_count(); ++n) {
    const NodeRole role = g.role(n);
    if (role == NodeRole::Server) {
      for (std::size_t l = 0; l < L; ++l)
        put(ConstraintFamily::Srv, std::abs(1.0 - x(n, l)), n, {}, l);
      continue;
    }
    if (role == NodeRole::User) {
      const UserProfile* p = s.profile(n);
      double sum = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        sum += x(n, l);
        const bool supported =
            p && std::binary_search(p->supported_levels.begin(), p->supported_levels.end(), l);
        if (!supported) put(ConstraintFamily::CapUsr, std::abs(x(n, l)), n, {}, l);
      }
      put(ConstraintFamily::One, std::abs(sum - 1.0), n, {}, {});
    }
    for (std::size_t l = 0; l < L; ++l) {
      double in = 0.0;
      for (EdgeId e : g.in_edges(n)) in += y(e, l);
      put(ConstraintFamily::FwdIn, x(n, l) - in, n, {}, l);
    }
  }

  const auto B = s.catalog.bandwidths();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto& ed = g.edge(e);
    double load = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      put(ConstraintFamily::FwdOut, y(e, l) - x(ed.from, l), ed.from, e, l);
      load += B[l] * y(e, l);
    }
    put(ConstraintFamily::Bw, load - ed.capacity_mbps, {}, e, {});
  }

  if (integral) {
    auto frac = [](double v) { return std::abs(v - std::round(v)); };
    for (NodeId n = 0; n < g.node_count(); ++n)
      for (std::size_t l = 0; l < L; ++l) put(ConstraintFamily::Int, frac(x(n, l)), n, {}, l);
    for (EdgeId e = 0; e < g.edge_count(); ++e)
      for (std::size_t l = 0; l < L; ++l) put(ConstraintFamily::Int, frac(y(e, l)), {}, e, l);
  }
  return rep;
}

double link_load(const Scenario& s, const TransmissionState& y, EdgeId edge) {
  if (edge >= s.graph.edge_count() || edge >= y.rows())
    throw std::out_of_range("link_load: unknown edge " + std::to_string(edge));
  const auto B = s.catalog.bandwidths();
  double load = 0.0;
  for (std::size_t l = 0; l < B.size(); ++l) load += B[l] * y(edge, l);
  return load;
}

}  // namespace comets
