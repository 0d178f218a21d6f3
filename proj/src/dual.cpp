#include "comets/dual.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>

#include "comets/message.hpp"

namespace comets {

namespace {

using Clock = std::chrono::steady_clock;

void require_positive(std::span<const double> B, double capacity, const char* who) {
  if (!(capacity > 0.0)) throw std::invalid_argument(std::string(who) + ": capacity must be > 0");
  for (double b : B)
    if (!(b > 0.0)) throw std::invalid_argument(std::string(who) + ": bandwidths must be > 0");
}

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

bool forwarder_tail(const Scenario& s, EdgeId e) {
  return s.graph.role(s.graph.edge(e).from) == NodeRole::Forwarder;
}

// Per-node kernels shared by both driver modes so that they perform the same
// floating point operations in the same order.

double in_sum(const NetworkGraph& g, const TransmissionState& y, NodeId n, std::size_t l) {
  double sum = 0.0;
  for (EdgeId e : g.in_edges(n)) sum += y(e, l);
  return sum;
}

double project(double lambda, double step, double d) { return std::max(0.0, lambda - step * d); }

std::vector<double> lambda2_sum(const Scenario& s, const DualState& lambda, NodeId f) {
  std::vector<double> sum(s.catalog.size(), 0.0);
  for (EdgeId e : s.graph.out_edges(f))
    for (std::size_t l = 0; l < sum.size(); ++l) sum[l] += lambda.lambda2(e, l);
  return sum;
}

bool user_unique(double w, std::span<const double> Q, std::span<const double> lambda1,
                 std::span<const std::size_t> supported) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t l : supported) best = std::max(best, w * Q[l] - lambda1[l]);
  std::size_t hits = 0;
  for (std::size_t l : supported)
    if (nearly_equal(w * Q[l] - lambda1[l], best)) ++hits;
  return hits == 1;
}

bool selection_unique(std::span<const double> lambda1, std::span<const double> l2sum) {
  for (std::size_t l = 0; l < lambda1.size(); ++l)
    if (nearly_equal(l2sum[l], lambda1[l])) return false;
  return true;
}

std::vector<double> edge_coef(std::span<const double> lambda1_down,
                              std::span<const double> lambda2_edge) {
  std::vector<double> c(lambda1_down.size());
  for (std::size_t l = 0; l < c.size(); ++l) c[l] = lambda1_down[l] - lambda2_edge[l];
  return c;
}

double sup_norm_change(const DualState& a, const DualState& b) {
  double m = 0.0;
  auto va = a.lambda1.values(), vb = b.lambda1.values();
  for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
  va = a.lambda2.values();
  vb = b.lambda2.values();
  for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
  return m;
}

}  // namespace

DualState DualState::zeros(const Scenario& s) {
  return {LevelMatrix<NodeRowsTag>(s.graph.node_count(), s.catalog.size()),
          LevelMatrix<EdgeRowsTag>(s.graph.edge_count(), s.catalog.size())};
}

StepSchedule::StepSchedule(double alpha0, double beta0) : alpha0_(alpha0), beta0_(beta0) {
  if (!(alpha0 > 0.0) || !(beta0 > 0.0))
    throw std::invalid_argument("step bases must be positive");
}

std::vector<double> solve_knapsack(std::span<const double> coef, std::span<const double> B,
                                   double capacity) {
  require_positive(B, capacity, "solve_knapsack");
  if (coef.size() != B.size()) throw std::invalid_argument("solve_knapsack: size mismatch");
  std::vector<std::size_t> order;
  for (std::size_t l = 0; l < coef.size(); ++l)
    if (coef[l] > 0.0) order.push_back(l);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return coef[i] / B[i] > coef[j] / B[j];
  });
  std::vector<double> y(coef.size(), 0.0);
  double filled = 0.0;
  for (std::size_t l : order) {
    if (filled + B[l] > capacity) {
      y[l] = (capacity - filled) / B[l];
      break;
    }
    y[l] = 1.0;
    filled += B[l];
  }
  return y;
}

bool knapsack_unique(std::span<const double> coef, std::span<const double> B, double capacity,
                     std::span<const double> y) {
  double used = 0.0;
  for (std::size_t l = 0; l < y.size(); ++l) used += B[l] * y[l];
  const bool slack = capacity - used > 1e-12 * std::max(1.0, capacity);
  for (std::size_t i = 0; i < coef.size(); ++i) {
    if (coef[i] == 0.0 && slack) return false;
    if (coef[i] <= 0.0) continue;
    for (std::size_t j = 0; j < coef.size(); ++j) {
      if (i == j || coef[j] <= 0.0) continue;
      if (y[i] < 1.0 && y[j] > 0.0 && nearly_equal(coef[i] / B[i], coef[j] / B[j])) return false;
    }
  }
  return true;
}

std::vector<double> solve_server_edge(std::span<const double> lambda1_down,
                                      std::span<const double> B, double capacity) {
  require_positive(B, capacity, "solve_server_edge");
  return solve_knapsack(lambda1_down, B, capacity);
}

std::vector<double> solve_forwarder_edge(std::span<const double> lambda1_down,
                                         std::span<const double> lambda2_edge,
                                         std::span<const double> B, double capacity) {
  require_positive(B, capacity, "solve_forwarder_edge");
  return solve_knapsack(edge_coef(lambda1_down, lambda2_edge), B, capacity);
}

std::vector<double> solve_user(double weight, std::span<const double> Q,
                               std::span<const double> lambda1,
                               std::span<const std::size_t> supported) {
  if (supported.empty()) throw std::invalid_argument("solve_user: empty supported set");
  std::size_t best = supported.front();
  double best_score = weight * Q[best] - lambda1[best];
  for (std::size_t l : supported) {
    const double score = weight * Q[l] - lambda1[l];
    if (score > best_score || (score == best_score && l < best)) {
      best = l;
      best_score = score;
    }
  }
  std::vector<double> x(Q.size(), 0.0);
  x[best] = 1.0;
  return x;
}

std::vector<double> solve_forwarder_selection(std::span<const double> lambda1,
                                              std::span<const double> lambda2_sum) {
  std::vector<double> x(lambda1.size(), 0.0);
  for (std::size_t l = 0; l < x.size(); ++l) x[l] = lambda2_sum[l] - lambda1[l] > 0.0 ? 1.0 : 0.0;
  return x;
}

Maximizers solve_subproblems(const Scenario& s, const DualState& lambda) {
  const auto& g = s.graph;
  const auto B = s.catalog.bandwidths();
  const auto Q = s.catalog.qualities();
  Maximizers m{make_selection(s), make_transmission(s), true};

  for (NodeId n = 0; n < g.node_count(); ++n) {
    switch (g.role(n)) {
      case NodeRole::Server:
        std::fill(m.x.row(n).begin(), m.x.row(n).end(), 1.0);
        for (EdgeId e : g.out_edges(n)) {
          const auto& cap = g.edge(e).capacity_mbps;
          auto coef = lambda.lambda1.row(g.edge(e).to);
          auto y = solve_server_edge(coef, B, cap);
          m.unique = m.unique && knapsack_unique(coef, B, cap, y);
          std::copy(y.begin(), y.end(), m.y.row(e).begin());
        }
        break;
      case NodeRole::Forwarder: {
        auto sum = lambda2_sum(s, lambda, n);
        auto x = solve_forwarder_selection(lambda.lambda1.row(n), sum);
        m.unique = m.unique && selection_unique(lambda.lambda1.row(n), sum);
        std::copy(x.begin(), x.end(), m.x.row(n).begin());
        for (EdgeId e : g.out_edges(n)) {
          const auto& cap = g.edge(e).capacity_mbps;
          auto coef = edge_coef(lambda.lambda1.row(g.edge(e).to), lambda.lambda2.row(e));
          auto y = solve_knapsack(coef, B, cap);
          m.unique = m.unique && knapsack_unique(coef, B, cap, y);
          std::copy(y.begin(), y.end(), m.y.row(e).begin());
        }
        break;
      }
      case NodeRole::User: {
        const UserProfile* p = s.profile(n);
        if (!p) throw StructuralError("user " + std::to_string(n) + " has no profile");
        auto x = solve_user(p->weight, Q, lambda.lambda1.row(n), p->supported_levels);
        m.unique = m.unique &&
                   user_unique(p->weight, Q, lambda.lambda1.row(n), p->supported_levels);
        std::copy(x.begin(), x.end(), m.x.row(n).begin());
        break;
      }
    }
  }
  return m;
}

Subgradients subgradients(const Scenario& s, const SelectionState& x, const TransmissionState& y) {
  const auto& g = s.graph;
  const std::size_t L = s.catalog.size();
  if (x.rows() != g.node_count() || x.levels() != L || y.rows() != g.edge_count() ||
      y.levels() != L)
    throw std::invalid_argument("subgradients: state shapes do not match the scenario");
  Subgradients d{LevelMatrix<NodeRowsTag>(g.node_count(), L),
                 LevelMatrix<EdgeRowsTag>(g.edge_count(), L)};
  for (NodeId n = 0; n < g.node_count(); ++n) {
    if (g.role(n) == NodeRole::Server) continue;
    for (std::size_t l = 0; l < L; ++l) d.d1(n, l) = in_sum(g, y, n, l) - x(n, l);
  }
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    if (!forwarder_tail(s, e)) continue;
    const NodeId f = g.edge(e).from;
    for (std::size_t l = 0; l < L; ++l) d.d2(e, l) = x(f, l) - y(e, l);
  }
  return d;
}

DualState update_multipliers(const DualState& lambda, const Subgradients& d, double alpha,
                             double beta) {
  DualState out = lambda;
  auto l1 = out.lambda1.values();
  auto g1 = d.d1.values();
  for (std::size_t i = 0; i < l1.size(); ++i) l1[i] = project(l1[i], alpha, g1[i]);
  auto l2 = out.lambda2.values();
  auto g2 = d.d2.values();
  for (std::size_t i = 0; i < l2.size(); ++i) l2[i] = project(l2[i], beta, g2[i]);
  return out;
}

double dual_value_groups(const Scenario& s, const DualState& lambda, const SelectionState& x,
                         const TransmissionState& y) {
  const auto& g = s.graph;
  const auto Q = s.catalog.qualities();
  const std::size_t L = s.catalog.size();
  double server_edges = 0.0, forwarder_edges = 0.0, users = 0.0, forwarders = 0.0;

  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const auto& ed = g.edge(e);
    const NodeRole tail = g.role(ed.from);
    for (std::size_t l = 0; l < L; ++l) {
      if (tail == NodeRole::Server)
        server_edges += lambda.lambda1(ed.to, l) * y(e, l);
      else if (tail == NodeRole::Forwarder)
        forwarder_edges += (lambda.lambda1(ed.to, l) - lambda.lambda2(e, l)) * y(e, l);
    }
  }
  for (NodeId n = 0; n < g.node_count(); ++n) {
    if (g.role(n) == NodeRole::User) {
      const UserProfile* p = s.profile(n);
      for (std::size_t l = 0; l < L; ++l)
        users += (p->weight * Q[l] - lambda.lambda1(n, l)) * x(n, l);
    } else if (g.role(n) == NodeRole::Forwarder) {
      auto sum = lambda2_sum(s, lambda, n);
      for (std::size_t l = 0; l < L; ++l) forwarders += (sum[l] - lambda.lambda1(n, l)) * x(n, l);
    }
  }
  return server_edges + forwarder_edges + users + forwarders;
}

double lagrangian(const Scenario& s, const DualState& lambda, const SelectionState& x,
                  const TransmissionState& y) {
  const auto& g = s.graph;
  const std::size_t L = s.catalog.size();
  double value = objective(s, x);
  for (NodeId n = 0; n < g.node_count(); ++n) {
    if (g.role(n) == NodeRole::Server) continue;
    for (std::size_t l = 0; l < L; ++l) value += lambda.lambda1(n, l) * (in_sum(g, y, n, l) - x(n, l));
  }
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    if (!forwarder_tail(s, e)) continue;
    const NodeId f = g.edge(e).from;
    for (std::size_t l = 0; l < L; ++l) value += lambda.lambda2(e, l) * (x(f, l) - y(e, l));
  }
  return value;
}

double dual_value(const Scenario& s, const DualState& lambda, const SelectionState& x,
                  const TransmissionState& y) {
  const double groups = dual_value_groups(s, lambda, x, y);
  const double direct = lagrangian(s, lambda, x, y);
  const double scale = std::max({1.0, std::abs(groups), std::abs(direct)});
  if (std::abs(groups - direct) > 1e-9 * scale)
    throw InternalConsistencyError("dual decomposition mismatch: groups " +
                                   std::to_string(groups) + " vs direct " +
                                   std::to_string(direct));
  return groups;
}

std::string_view to_string(DualMode m) {
  return m == DualMode::Centralized ? "centralized" : "distributed";
}

std::optional<DualMode> parse_mode(std::string_view text) {
  if (text == "centralized") return DualMode::Centralized;
  if (text == "distributed") return DualMode::Distributed;
  return std::nullopt;
}

double IterationTrace::best_bound() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) best = std::min(best, r.g);
  return best;
}

void IterationTrace::write_csv(std::ostream& out, bool wall_clock) const {
  out << (wall_clock ? "t,g,change,wall_ms\n" : "t,g,change\n");
  const auto old = out.precision(17);
  for (const auto& r : rows) {
    out << r.t << ',' << r.g << ',' << r.change;
    if (wall_clock) out << ',' << r.wall_ms;
    out << '\n';
  }
  out.precision(old);
}

namespace {

// Message-passing round. Each node keeps only its own multiplier rows and
// learns neighbour rows from decoded messages:
//   1. every non-server node sends its lambda1 row to each upstream neighbour
//   2. every node solves its local subproblems
//   3. every node sends the y row of each outgoing edge to the edge's head
//   4. every node updates its own lambda1 row and outgoing lambda2 rows
class Network {
 public:
  Network(const Scenario& s, const DualState& init) : s_(s), state_(init) {}

  Maximizers round(std::uint32_t t, double alpha, double beta, MessageStats& stats) {
    const auto& g = s_.graph;
    const std::size_t L = s_.catalog.size();
    const auto B = s_.catalog.bandwidths();
    const auto Q = s_.catalog.qualities();

    // 1. lambda1 rows travel upstream; inbox indexed by edge.
    LevelMatrix<EdgeRowsTag> down_lambda(g.edge_count(), L);
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      const NodeId head = g.edge(e).to;
      auto row = state_.lambda1.row(head);
      MultiplierMessage msg{head, t, {row.begin(), row.end()}};
      auto got = transmit(msg, stats);
      std::copy(got.values.begin(), got.values.end(), down_lambda.row(e).begin());
    }

    // 2. local solves.
    Maximizers m{make_selection(s_), make_transmission(s_), true};
    for (NodeId n = 0; n < g.node_count(); ++n) {
      const NodeRole role = g.role(n);
      if (role == NodeRole::User) {
        const UserProfile* p = s_.profile(n);
        auto x = solve_user(p->weight, Q, state_.lambda1.row(n), p->supported_levels);
        m.unique = m.unique &&
                   user_unique(p->weight, Q, state_.lambda1.row(n), p->supported_levels);
        std::copy(x.begin(), x.end(), m.x.row(n).begin());
        continue;
      }
      if (role == NodeRole::Server) {
        std::fill(m.x.row(n).begin(), m.x.row(n).end(), 1.0);
      } else {
        auto sum = lambda2_sum(s_, state_, n);
        auto x = solve_forwarder_selection(state_.lambda1.row(n), sum);
        m.unique = m.unique && selection_unique(state_.lambda1.row(n), sum);
        std::copy(x.begin(), x.end(), m.x.row(n).begin());
      }
      for (EdgeId e : g.out_edges(n)) {
        const double cap = g.edge(e).capacity_mbps;
        std::vector<double> coef;
        if (role == NodeRole::Server) {
          auto r = down_lambda.row(e);
          coef.assign(r.begin(), r.end());
        } else {
          coef = edge_coef(down_lambda.row(e), state_.lambda2.row(e));
        }
        auto y = solve_knapsack(coef, B, cap);
        m.unique = m.unique && knapsack_unique(coef, B, cap, y);
        std::copy(y.begin(), y.end(), m.y.row(e).begin());
      }
    }

    // 3. y rows travel downstream.
    TransmissionState received(g.edge_count(), L);
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      auto row = m.y.row(e);
      MultiplierMessage msg{g.edge(e).from, t, {row.begin(), row.end()}};
      auto got = transmit(msg, stats);
      std::copy(got.values.begin(), got.values.end(), received.row(e).begin());
    }

    // 4. local updates, same arithmetic as update_multipliers(subgradients()).
    next_ = state_;
    for (NodeId n = 0; n < g.node_count(); ++n) {
      if (g.role(n) == NodeRole::Server) continue;
      for (std::size_t l = 0; l < L; ++l) {
        const double d = in_sum(g, received, n, l) - m.x(n, l);
        next_.lambda1(n, l) = project(state_.lambda1(n, l), alpha, d);
      }
      if (g.role(n) != NodeRole::Forwarder) continue;
      for (EdgeId e : g.out_edges(n))
        for (std::size_t l = 0; l < L; ++l) {
          const double d = m.x(n, l) - m.y(e, l);
          next_.lambda2(e, l) = project(state_.lambda2(e, l), beta, d);
        }
    }
    return m;
  }

  const DualState& state() const { return state_; }
  const DualState& next() const { return next_; }
  void advance() { state_ = next_; }

 private:
  MultiplierMessage transmit(const MultiplierMessage& msg, MessageStats& stats) {
    encode_message(msg, buffer_);
    stats.messages += 1;
    stats.bytes += buffer_.size();
    return decode_message(buffer_, msg.values.size());
  }

  const Scenario& s_;
  DualState state_;
  DualState next_;
  std::vector<std::uint8_t> buffer_;
};

}  // namespace

IterationTrace run(const Scenario& s, const DualOptions& opts) {
  require_valid(s);
  IterationTrace trace;
  DualState lambda = opts.warm_start.value_or(DualState::zeros(s));
  if (lambda.lambda1.rows() != s.graph.node_count() || lambda.lambda1.levels() != s.catalog.size() ||
      lambda.lambda2.rows() != s.graph.edge_count() || lambda.lambda2.levels() != s.catalog.size())
    throw std::invalid_argument("run: warm start shape does not match the scenario");

  std::optional<Network> net;
  if (opts.mode == DualMode::Distributed) net.emplace(s, lambda);

  for (std::size_t t = 1; t <= opts.t_max; ++t) {
    const auto start = Clock::now();
    const double alpha = opts.steps.alpha(t);
    const double beta = opts.steps.beta(t);
    Maximizers m;
    DualState next;
    if (net) {
      m = net->round(static_cast<std::uint32_t>(t), alpha, beta, trace.traffic);
      next = net->next();
    } else {
      m = solve_subproblems(s, lambda);
      next = update_multipliers(lambda, subgradients(s, m.x, m.y), alpha, beta);
    }
    IterationRecord rec;
    rec.t = t;
    rec.g = dual_value(s, lambda, m.x, m.y);
    rec.change = sup_norm_change(lambda, next);
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    rec.unique = m.unique;
    if (opts.keep_iterates || t == opts.t_max || rec.change < opts.eps) {
      rec.x = std::move(m.x);
      rec.y = std::move(m.y);
    }
    trace.rows.push_back(std::move(rec));
    lambda = std::move(next);
    if (net) net->advance();
    if (trace.rows.back().change < opts.eps) {
      trace.converged = true;
      break;
    }
  }
  trace.final_state = std::move(lambda);
  return trace;
}

}  // namespace comets
