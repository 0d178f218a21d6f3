#include "comets/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "comets/reconstruct.hpp"
#include "comets/sim/client.hpp"
#include "comets/sim/tables.hpp"

namespace comets::sim {

nlohmann::json SimCounters::to_json() const {
  nlohmann::json cache = nlohmann::json::array();
  for (const auto& [depth, hl] : cache_by_depth)
    cache.push_back({{"depth", depth},
                     {"hits", hl.first},
                     {"lookups", hl.second},
                     {"hit_ratio", hl.second ? static_cast<double>(hl.first) / hl.second : 0.0}});
  return {{"events", events},
          {"packets_sent", packets_sent},
          {"packets_dropped", packets_dropped},
          {"bytes_sent", bytes_sent},
          {"upstream_video_interests", upstream_video_interests},
          {"aggregated_interests", aggregated_interests},
          {"suppressed_retransmissions", suppressed_retransmissions},
          {"retransmissions", retransmissions},
          {"skipped_chunks", skipped_chunks},
          {"optimizer_runs", optimizer_runs},
          {"recommend_nacks", recommend_nacks},
          {"backpressure_nacks", backpressure_nacks},
          {"congestion_nacks", congestion_nacks},
          {"version_nacks", version_nacks},
          {"prefetches", prefetches},
          {"state_messages", state_messages},
          {"state_bytes", state_bytes},
          {"rejected_data", rejected_data},
          {"cache", cache},
          {"end_time", end_time},
          {"horizon_reached", horizon_reached}};
}

Scenario restrict_users(const Scenario& s, const std::vector<UserProfile>& active,
                        std::vector<NodeId>& mapping) {
  std::map<NodeId, const UserProfile*> keep;
  for (const auto& p : active) keep[p.node] = &p;
  std::vector<NodeId> new_id(s.graph.node_count(), kLocalFace);
  std::vector<NodeRole> roles;
  mapping.clear();
  for (NodeId n = 0; n < s.graph.node_count(); ++n) {
    if (s.graph.role(n) == NodeRole::User && !keep.count(n)) continue;
    new_id[n] = static_cast<NodeId>(roles.size());
    roles.push_back(s.graph.role(n));
    mapping.push_back(n);
  }
  std::vector<Edge> edges;
  for (const auto& e : s.graph.edges())
    if (new_id[e.from] != kLocalFace && new_id[e.to] != kLocalFace)
      edges.push_back({new_id[e.from], new_id[e.to], e.capacity_mbps, e.delay_s});
  Scenario out;
  out.catalog = s.catalog;
  out.graph = NetworkGraph(std::move(roles), std::move(edges));
  out.sim = s.sim;
  for (const auto& [old, p] : keep) {
    UserProfile q = *p;
    q.node = new_id[old];
    out.users.push_back(std::move(q));
  }
  std::sort(out.users.begin(), out.users.end(),
            [](const UserProfile& a, const UserProfile& b) { return a.node < b.node; });
  return out;
}

namespace {

struct Channel {
  NodeId from = 0;
  NodeId to = 0;
  double capacity_mbps = 0.0;
  double delay_s = 0.0;
  double busy_until = 0.0;
};

struct EvDeliver {
  std::size_t channel;
  Packet packet;
};
struct EvTick {
  std::size_t client;
  std::uint64_t interval;
};
struct EvWake {
  std::size_t client;
};
struct EvTimeout {
  std::size_t client;
  std::uint64_t seq;
  std::uint64_t timer;
};
struct EvCollect {
  std::uint64_t interval;
};
struct EvOptimize {
  std::uint64_t interval;
};
struct EvDecision {
  std::uint64_t interval;
};
struct EvRetry {
  NodeId node;
  std::uint64_t interval;
  int attempt;
};
using Event = std::variant<EvDeliver, EvTick, EvWake, EvTimeout, EvCollect, EvOptimize,
                           EvDecision, EvRetry>;

struct Queued {
  double time;
  std::uint64_t seq;
  Event ev;
};
struct Later {
  bool operator()(const Queued& a, const Queued& b) const {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

struct PendingRequest {
  Name name;
  ClientRequest request;
};

// Per-node role state. Edge fields are used by nodes with attached clients.
struct NodeState {
  Pit pit;
  ContentStore cs;
  int depth = 0;
  std::optional<NodeId> parent;
  std::map<std::uint64_t, std::map<NodeId, PendingRequest>> requests;  // interval -> client
  std::map<NodeId, PendingRequest> latest;
  std::map<NodeId, std::optional<std::size_t>> face_level;
  std::map<NodeId, double> last_backpressure;
  std::optional<double> upstream_srtt;
  std::uint64_t applied_version = 0;
  bool applied_any = false;
};

struct OptimizerState {
  std::map<std::uint64_t, std::map<NodeId, std::vector<ClientRequest>>> reports;
  std::map<std::uint64_t, std::vector<Assignment>> decisions;
  std::optional<std::uint64_t> latest;
  std::map<std::uint64_t, std::vector<std::pair<NodeId, Name>>> held;  // version -> (face, name)
};

class Simulation {
 public:
  Simulation(const Scenario& s, const SimOptions& opts)
      : s_(s), p_(s.sim), opts_(opts), rng_(s.sim.seed), loss_(s.sim.loss_rate) {
    const auto& g = s.graph;
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      const auto& ed = g.edge(e);
      channel_index_[{ed.from, ed.to}] = channels_.size();
      channels_.push_back({ed.from, ed.to, ed.capacity_mbps, ed.delay_s});
      channel_index_[{ed.to, ed.from}] = channels_.size();
      channels_.push_back({ed.to, ed.from, ed.capacity_mbps, ed.delay_s});
    }
    const auto depth = compute_depths(g);
    nodes_.resize(g.node_count());
    for (NodeId n = 0; n < g.node_count(); ++n) {
      nodes_[n].depth = depth[n];
      nodes_[n].cs = ContentStore(g.role(n) == NodeRole::Forwarder ? p_.cache_capacity : 0);
      if (!g.in_edges(n).empty()) nodes_[n].parent = g.edge(g.in_edges(n).front()).from;
    }
    optimizer_node_ = g.nodes_with_role(NodeRole::Server).front();
    total_chunks_ = static_cast<std::uint64_t>(std::ceil(p_.duration_s / p_.chunk_s - 1e-9));
    for (const auto& u : s.users) {
      ClientRuntime c;
      c.node = u.node;
      c.supported = u.supported_levels;
      c.weight = u.weight;
      c.total_chunks = total_chunks_;
      c.cwnd = p_.aimd.initial_window;
      c.done.assign(total_chunks_, false);
      c.trace.node = u.node;
      client_of_[u.node] = clients_.size();
      clients_.push_back(std::move(c));
      play_start_.push_back(std::nullopt);
      contiguous_.push_back(0);
      wake_pending_.push_back(false);
      finished_flag_.push_back(false);
    }
    if (total_chunks_ == 0) finished_ = clients_.size();
  }

  SimResult run() {
    for (std::size_t i = 0; i < clients_.size(); ++i) schedule(0.0, EvTick{i, 0});
    schedule(p_.collect_window_s, EvCollect{0});
    const double horizon = opts_.horizon_factor * p_.duration_s + 60.0;
    while (!queue_.empty()) {
      Queued q = queue_.top();
      queue_.pop();
      if (q.time > horizon) {
        counters_.horizon_reached = true;
        break;
      }
      now_ = q.time;
      ++counters_.events;
      std::visit([this](auto& ev) { handle(ev); }, q.ev);
      if (finished_ == clients_.size()) break;
    }
    counters_.end_time = now_;

    SimResult r;
    for (auto& c : clients_) {
      c.trace.downgrades = c.downgrades;
      c.trace.unserved = c.unserved;
      r.traces.push_back(c.trace);
    }
    r.metrics = compute_metrics(s_, r.traces, p_.seed);
    r.counters = counters_;
    r.metrics.extra = counters_.to_json();
    r.event_log = log_.str();
    return r;
  }

 private:
  // --- infrastructure ----------------------------------------------------

  void schedule(double t, Event ev) { queue_.push({t, next_seq_++, std::move(ev)}); }

  void log(const std::string& node, std::string_view kind, const std::string& name,
           std::uint64_t bytes) {
    if (!opts_.record_log) return;
    char t[32];
    std::snprintf(t, sizeof t, "%.9f", now_);
    log_ << t << ',' << node << ',' << kind << ',' << name << ',' << bytes << '\n';
  }
  void log(NodeId node, std::string_view kind, const Name& name, std::uint64_t bytes = 0) {
    if (!opts_.record_log) return;
    log(std::to_string(node), kind, name.to_string(), bytes);
  }

  static std::string link_label(NodeId from, NodeId to) {
    return std::to_string(from) + ">" + std::to_string(to);
  }

  void send(NodeId from, NodeId to, Packet p) {
    const std::size_t ci = channel_index_.at({from, to});
    Channel& ch = channels_[ci];
    const std::uint64_t bytes = wire_size(p);
    const double start = std::max(now_, ch.busy_until);
    ch.busy_until = start + static_cast<double>(bytes) * 8.0 / (ch.capacity_mbps * 1e6);
    ++counters_.packets_sent;
    counters_.bytes_sent += bytes;
    if (opts_.record_log)
      log(link_label(from, to), std::string("tx_") + std::string(kind_of(p)), name_of(p).to_string(), bytes);
    if (loss_ > 0.0 && std::bernoulli_distribution(loss_)(rng_)) {
      ++counters_.packets_dropped;
      if (opts_.record_log) log(link_label(from, to), "drop", name_of(p).to_string(), bytes);
      return;
    }
    schedule(ch.busy_until + ch.delay_s, EvDeliver{ci, std::move(p)});
  }

  double queue_delay(NodeId from, NodeId to) const {
    const Channel& ch = channels_[channel_index_.at({from, to})];
    return std::max(0.0, ch.busy_until - now_);
  }

  NodeRole role(NodeId n) const { return s_.graph.role(n); }
  bool is_client_face(Face f) const { return f != kLocalFace && role(f) == NodeRole::User; }

  std::uint64_t chunk_bytes(std::size_t level) const {
    return static_cast<std::uint64_t>(std::llround(s_.catalog.bandwidth(level) * p_.chunk_s * 1e6 / 8.0));
  }

  // --- dispatch ----------------------------------------------------------

  void handle(EvDeliver& ev) {
    const Channel& ch = channels_[ev.channel];
    if (opts_.record_log)
      log(link_label(ch.from, ch.to), std::string("rx_") + std::string(kind_of(ev.packet)),
          name_of(ev.packet).to_string(), wire_size(ev.packet));
    switch (role(ch.to)) {
      case NodeRole::User: client_receive(client_of_.at(ch.to), ev.packet); break;
      case NodeRole::Server: server_receive(ch.to, ch.from, ev.packet); break;
      case NodeRole::Forwarder: forwarder_receive(ch.to, ch.from, ev.packet); break;
    }
  }

  // --- producer / optimizer ---------------------------------------------

  void server_receive(NodeId self, NodeId face, Packet& p) {
    if (auto* ri = std::get_if<RangeInterest>(&p)) return edge_record(self, *ri);
    auto* in = std::get_if<Interest>(&p);
    if (!in) return;
    const Name& name = in->name;
    if (name.is_video()) {
      auto level = s_.catalog.find(name[3]);
      if (!level) return;
      Data d{name, chunk_bytes(*level), true, level, {}, {}};
      return send_data_down(self, face, std::move(d));
    }
    if (name.size() < 5 || name[0] != "ndn" || name[1] != "opt") return;
    const auto fwd = static_cast<NodeId>(name.number("forwarder").value_or(0));
    const auto v = name.number("v").value_or(0);
    if (name[2] == "report") {
      opt_.reports[v][fwd] = in->report;
      Data ack{name, 8, true, {}, {}, v};
      send(self, face, std::move(ack));
    } else if (name[2] == "config") {
      answer_config(self, face, name, fwd, v);
    }
  }

  void answer_config(NodeId self, NodeId face, const Name& name, NodeId fwd, std::uint64_t v) {
    if (opt_.latest && v < *opt_.latest) {
      ++counters_.version_nacks;
      log(self, "version_outdated", name);
      send(self, face, make_nack(name, NackReason::VersionOutdated, std::nullopt, *opt_.latest));
      return;
    }
    auto it = opt_.decisions.find(v);
    if (it == opt_.decisions.end() || !opt_.latest || *opt_.latest < v) {
      opt_.held[v].push_back({face, name});
      return;
    }
    std::set<NodeId> mine;
    for (const auto& r : opt_.reports[v][fwd]) mine.insert(r.client);
    Data d{name, 0, true, {}, {}, v};
    for (const auto& a : it->second)
      if (mine.count(a.client)) d.assignments.push_back(a);
    send(self, face, std::move(d));
  }

  // --- forwarders ---------------------------------------------------------

  void forwarder_receive(NodeId self, NodeId face, Packet& p) {
    NodeState& st = nodes_[self];
    if (auto* ri = std::get_if<RangeInterest>(&p)) return edge_record(self, *ri);
    if (auto* in = std::get_if<Interest>(&p)) {
      const Name& name = in->name;
      if (name.is_video()) {
        auto& [hits, lookups] = counters_.cache_by_depth[st.depth];
        ++lookups;
        if (auto d = st.cs.lookup(name)) {
          ++hits;
          log(self, "cache_hit", name);
          return send_data_down(self, face, std::move(*d));
        }
      }
      if (!st.parent || !pit_admit(self, name, face)) return;
      if (name.is_video()) ++counters_.upstream_video_interests;
      send(self, *st.parent, std::move(p));
      return;
    }
    if (auto* d = std::get_if<Data>(&p)) {
      if (d->name.is_video()) st.cs.insert(*d);
      if (const auto* e = st.pit.find(d->name); e && !e->retransmitted && e->expiry > now_) {
        const double rtt = now_ - e->created;
        st.upstream_srtt = st.upstream_srtt ? 0.875 * *st.upstream_srtt + 0.125 * rtt : rtt;
      }
      for (Face f : st.pit.satisfy(d->name, now_)) {
        if (f == kLocalFace)
          local_data(self, *d);
        else
          send_data_down(self, f, *d);
      }
      return;
    }
    if (auto* n = std::get_if<Nack>(&p)) {
      for (Face f : st.pit.satisfy(n->name, now_)) {
        if (f == kLocalFace)
          local_nack(self, *n);
        else
          send(self, f, *n);
      }
    }
  }

  void send_data_down(NodeId self, Face face, Data d) {
    std::optional<Nack> bp;
    if (is_client_face(face)) {
      NodeState& st = nodes_[self];
      auto last = st.last_backpressure.find(face);
      const bool cooling =
          last != st.last_backpressure.end() && now_ - last->second < p_.backpressure_cooldown_s;
      if (!cooling && d.name.is_video()) {
        const Channel& ch = channels_[channel_index_.at({self, face})];
        FaceQueue q{queue_delay(self, face) * ch.capacity_mbps * 1e6 / 8.0, ch.capacity_mbps,
                    st.face_level[face], clients_[client_of_.at(face)].supported};
        const auto seq = d.name.number("chunk").value_or(0);
        bp = backpressure_check(q, p_.backpressure_threshold_s, s_.catalog, p_.title, seq + 1,
                                d.name);
        if (bp) {
          st.last_backpressure[face] = now_;
          if (bp->recommended) st.face_level[face] = s_.catalog.find((*bp->recommended)[3]);
        }
      }
    }
    send(self, face, std::move(d));
    if (bp) {
      ++counters_.backpressure_nacks;
      log(self, "backpressure", bp->recommended ? *bp->recommended : bp->name);
      send(self, face, std::move(*bp));
    }
  }

  // Whether an Interest arriving on `face` goes upstream. A retransmission
  // from the same downstream face is held back until twice the measured
  // upstream round trip has passed since the last forward.
  bool pit_admit(NodeId self, const Name& name, Face face) {
    NodeState& st = nodes_[self];
    switch (st.pit.insert_or_aggregate(name, face, now_, p_.pit_lifetime_s)) {
      case PitResult::Forwarded:
        return true;
      case PitResult::Aggregated:
        ++counters_.aggregated_interests;
        log(self, "pit_aggregate", name);
        return false;
      case PitResult::Retransmission: {
        const double since = now_ - st.pit.find(name)->last_forward;
        if (face != kLocalFace && st.upstream_srtt && since < 2.0 * *st.upstream_srtt) {
          ++counters_.suppressed_retransmissions;
          log(self, "retx_suppressed", name);
          return false;
        }
        st.pit.mark_forwarded(name, now_);
        return true;
      }
    }
    return false;
  }

  void request_upstream(NodeId self, Interest in) {
    if (pit_admit(self, in.name, kLocalFace)) send(self, *nodes_[self].parent, std::move(in));
  }

  void local_data(NodeId self, const Data& d) {
    const Name& name = d.name;
    if (name.size() < 3 || name[1] != "opt") return;
    const auto v = d.version.value_or(0);
    if (name[2] == "report") {
      request_upstream(self, Interest{Name::config(self, v), {}});
    } else if (name[2] == "config") {
      edge_apply(self, d.assignments, v);
    }
  }

  void local_nack(NodeId self, const Nack& n) {
    if (n.reason == NackReason::VersionOutdated && n.latest_version)
      request_upstream(self, Interest{Name::config(self, *n.latest_version), {}});
  }

  // --- edge role (node with attached clients) -----------------------------

  std::uint64_t interval_at(double t) const {
    return static_cast<std::uint64_t>(std::floor(t / p_.interval_s + 1e-9));
  }

  void edge_record(NodeId self, const RangeInterest& ri) {
    NodeState& st = nodes_[self];
    PendingRequest pr{ri.name, ri.request};
    st.requests[interval_at(now_)][ri.request.client] = pr;
    st.latest[ri.request.client] = pr;
  }

  void handle(EvCollect& ev) {
    const std::uint64_t k = ev.interval;
    if (opts_.mode == DualMode::Centralized) {
      for (NodeId n = 0; n < nodes_.size(); ++n) {
        auto it = nodes_[n].requests.find(k);
        if (it == nodes_[n].requests.end() || it->second.empty()) continue;
        std::vector<ClientRequest> report;
        for (const auto& [client, pr] : it->second) report.push_back(pr.request);
        if (n == optimizer_node_) {
          opt_.reports[k][n] = std::move(report);
          continue;
        }
        log(n, "report", Name::report(n, k));
        request_upstream(n, Interest{Name::report(n, k), std::move(report)});
        schedule(now_ + 1.0, EvRetry{n, k, 1});
      }
      schedule(now_ + 2.0 * p_.collect_window_s, EvOptimize{k});
    } else {
      schedule(now_, EvOptimize{k});
    }
    if (finished_ < clients_.size()) schedule((k + 1) * p_.interval_s + p_.collect_window_s, EvCollect{k + 1});
  }

  void handle(EvRetry& ev) {
    NodeState& st = nodes_[ev.node];
    if (st.applied_any && st.applied_version >= ev.interval) return;
    if (opt_.latest && *opt_.latest > ev.interval) return;
    log(ev.node, "config_retry", Name::config(ev.node, ev.interval));
    request_upstream(ev.node, Interest{Name::config(ev.node, ev.interval), {}});
    if (ev.attempt < kMaxRetransmissions) schedule(now_ + 1.0, EvRetry{ev.node, ev.interval, ev.attempt + 1});
  }

  void handle(EvOptimize& ev) {
    const std::uint64_t k = ev.interval;
    std::vector<ClientRequest> active;
    if (opts_.mode == DualMode::Centralized) {
      for (const auto& [fwd, reqs] : opt_.reports[k])
        active.insert(active.end(), reqs.begin(), reqs.end());
    } else {
      for (auto& st : nodes_)
        if (auto it = st.requests.find(k); it != st.requests.end())
          for (const auto& [client, pr] : it->second) active.push_back(pr.request);
    }
    std::sort(active.begin(), active.end(),
              [](const ClientRequest& a, const ClientRequest& b) { return a.client < b.client; });
    std::vector<Assignment> out;
    if (!active.empty()) {
      std::vector<UserProfile> profiles;
      for (const auto& r : active) profiles.push_back({r.client, r.levels, r.weight});
      std::vector<NodeId> mapping;
      Scenario sub = restrict_users(s_, profiles, mapping);
      DualOptions o = opts_.optimizer;
      o.mode = opts_.mode;
      o.keep_iterates = false;
      OptimizeResult res = optimize(sub, o);
      ++counters_.optimizer_runs;
      counters_.state_messages += res.trace.traffic.messages;
      counters_.state_bytes += res.trace.traffic.bytes;
      for (const auto& r : active) {
        Assignment a{r.client, std::nullopt, r.next_chunk};
        const auto it = std::find(mapping.begin(), mapping.end(), r.client);
        const NodeId sub_id = static_cast<NodeId>(it - mapping.begin());
        for (std::size_t l = 0; l < s_.catalog.size(); ++l)
          if (res.best.x(sub_id, l) == 1.0) a.level = l;
        out.push_back(a);
      }
      char buf[96];
      std::snprintf(buf, sizeof buf, "z=%.6f;bound=%.6f;users=%zu", res.z_best, res.dual_bound,
                    active.size());
      log(std::to_string(optimizer_node_), "optimize", buf, 0);
    }
    opt_.decisions[k] = std::move(out);
    schedule(now_ + p_.optimizer_delay_s, EvDecision{k});
  }

  void handle(EvDecision& ev) {
    const std::uint64_t k = ev.interval;
    opt_.latest = k;
    const auto& decision = opt_.decisions[k];
    if (opts_.mode == DualMode::Distributed) {
      std::map<NodeId, std::vector<Assignment>> by_edge;
      for (const auto& a : decision) by_edge[*nodes_[a.client].parent].push_back(a);
      for (auto& [edge, list] : by_edge) edge_apply(edge, list, k);
      return;
    }
    if (auto it = opt_.reports[k].find(optimizer_node_); it != opt_.reports[k].end()) {
      std::set<NodeId> mine;
      for (const auto& r : it->second) mine.insert(r.client);
      std::vector<Assignment> list;
      for (const auto& a : decision)
        if (mine.count(a.client)) list.push_back(a);
      edge_apply(optimizer_node_, list, k);
    }
    auto held = std::move(opt_.held);
    opt_.held.clear();
    for (auto& [v, waiting] : held)
      for (auto& [face, name] : waiting) {
        const auto fwd = static_cast<NodeId>(name.number("forwarder").value_or(0));
        answer_config(optimizer_node_, face, name, fwd, v);
      }
  }

  void edge_apply(NodeId self, const std::vector<Assignment>& list, std::uint64_t version) {
    NodeState& st = nodes_[self];
    if (st.applied_any && version < st.applied_version) return;
    st.applied_any = true;
    st.applied_version = version;
    for (const auto& a : list) {
      auto pr = st.latest.find(a.client);
      if (pr == st.latest.end()) continue;
      ClientRuntime& c = clients_[client_of_.at(a.client)];
      std::optional<std::size_t> level = a.level;
      if (!level) {
        // stranded by the repair step: fall back to the lowest advertised level
        c.unserved = true;
        level = pr->second.request.levels.front();
      }
      st.face_level[a.client] = level;
      const Name video = Name::video(p_.title, s_.catalog.level(*level).name, a.next_chunk);
      const Pit::Entry* pending = st.pit.find(video);
      if (a.next_chunk < total_chunks_ && role(self) == NodeRole::Forwarder &&
          !st.cs.contains(video) && !(pending && pending->expiry > now_)) {
        ++counters_.prefetches;
        ++counters_.upstream_video_interests;
        log(self, "prefetch", video);
        request_upstream(self, Interest{video, {}});
      }
      ++counters_.recommend_nacks;
      log(self, "assign", video);
      send(self, a.client, make_nack(pr->second.name, NackReason::RecommendResolution, video));
    }
  }

  // --- clients ------------------------------------------------------------

  NodeId parent_of(const ClientRuntime& c) const { return *nodes_[c.node].parent; }

  void handle(EvTick& ev) {
    ClientRuntime& c = clients_[ev.client];
    if (c.finished()) return;
    ClientRequest req{c.node, c.advertised(), c.weight, c.next_seq};
    const std::uint64_t nonce = std::uint64_t{c.node} * 1000000u + ev.interval;
    RangeInterest ri{Name::range_interest(p_.title, c.next_seq, nonce), std::move(req)};
    send(c.node, parent_of(c), std::move(ri));
    schedule((ev.interval + 1) * p_.interval_s, EvTick{ev.client, ev.interval + 1});
  }

  void handle(EvWake& ev) {
    wake_pending_[ev.client] = false;
    try_send(ev.client);
  }

  void handle(EvTimeout& ev) {
    ClientRuntime& c = clients_[ev.client];
    auto it = c.outstanding.find(ev.seq);
    if (it == c.outstanding.end() || it->second.timer != ev.timer) return;
    const std::size_t level = it->second.level;
    const Name name = Name::video(p_.title, s_.catalog.level(level).name, ev.seq);
    log(c.node, "timeout", name);
    if (client_on_timeout(c, ev.seq, p_.aimd, now_) == TimeoutAction::Retransmit) {
      ++counters_.retransmissions;
      log(c.node, "retransmit", name);
      express(ev.client, ev.seq, level);
    } else {
      ++counters_.skipped_chunks;
      log(c.node, "skip", name);
      advance_contiguous(ev.client);
      note_finished(ev.client);
      try_send(ev.client);
    }
  }

  void note_finished(std::size_t ci) {
    if (contiguous_[ci] == total_chunks_ && !finished_flag_[ci]) {
      finished_flag_[ci] = true;
      ++finished_;
      log(std::to_string(clients_[ci].node), "finished", "", 0);
    }
  }

  void express(std::size_t ci, std::uint64_t seq, std::size_t level) {
    ClientRuntime& c = clients_[ci];
    Outstanding& o = c.outstanding[seq];
    if (o.attempts == 0) o.first_send = now_;
    o.last_send = now_;
    o.level = level;
    o.timer = next_timer_++;
    send(c.node, parent_of(c), Interest{Name::video(p_.title, s_.catalog.level(level).name, seq), {}});
    schedule(now_ + c.timeout(p_.initial_rtt_s, p_.min_timeout_s, o.attempts), EvTimeout{ci, seq, o.timer});
  }

  bool buffer_allows(std::size_t ci, std::uint64_t seq) const {
    const double playhead = play_start_[ci] ? now_ - *play_start_[ci] : 0.0;
    return static_cast<double>(seq) * p_.chunk_s < playhead + p_.buffer_target_s;
  }

  void try_send(std::size_t ci) {
    ClientRuntime& c = clients_[ci];
    if (!c.level) return;
    while (true) {
      while (c.next_seq < total_chunks_ &&
             (c.done[c.next_seq] || c.outstanding.count(c.next_seq)))
        ++c.next_seq;
      if (c.next_seq >= total_chunks_) return;
      if (c.outstanding.size() >= static_cast<std::size_t>(c.cwnd)) {
        c.window_limited = true;
        return;
      }
      if (!buffer_allows(ci, c.next_seq)) {
        if (!wake_pending_[ci]) {
          wake_pending_[ci] = true;
          schedule(now_ + 0.25, EvWake{ci});
        }
        return;
      }
      express(ci, c.next_seq, *c.level);
      ++c.next_seq;
    }
  }

  void advance_contiguous(std::size_t ci) {
    ClientRuntime& c = clients_[ci];
    while (contiguous_[ci] < total_chunks_ && c.done[contiguous_[ci]]) ++contiguous_[ci];
    if (!play_start_[ci]) {
      if (static_cast<double>(contiguous_[ci]) * p_.chunk_s >= p_.startup_threshold_s ||
          contiguous_[ci] == total_chunks_)
        play_start_[ci] = now_;
    }
  }

  void client_receive(std::size_t ci, Packet& p) {
    ClientRuntime& c = clients_[ci];
    if (auto* n = std::get_if<Nack>(&p)) {
      if (n->reason == NackReason::RecommendResolution && n->recommended) {
        auto level = s_.catalog.find((*n->recommended)[3]);
        if (!level || !std::binary_search(c.supported.begin(), c.supported.end(), *level)) return;
        const bool assignment = n->name.is_range_interest();
        if (c.level && *level < *c.level) ++c.downgrades;
        if (!assignment) {
          if (c.level && *level >= *c.level) return;
          client_on_congestion(c, p_.aimd);
        }
        c.level = level;
        if (assignment) c.downgrade_pending = false;
        log(c.node, assignment ? "recommend" : "recommend_backpressure", *n->recommended);
        try_send(ci);
      } else if (n->reason == NackReason::Congestion) {
        ++counters_.congestion_nacks;
        client_on_congestion(c, p_.aimd);
      }
      return;
    }
    auto* d = std::get_if<Data>(&p);
    if (!d || !d->name.is_video()) return;
    const auto seq = d->name.number("chunk").value_or(0);
    auto it = c.outstanding.find(seq);
    if (it == c.outstanding.end() || !d->level || *d->level != it->second.level) return;
    if (!d->authentic) {
      ++counters_.rejected_data;
      return;
    }
    const Outstanding o = it->second;
    c.outstanding.erase(it);
    if (o.attempts == 0) c.on_rtt_sample(now_ - o.first_send);
    c.done[seq] = true;
    c.trace.arrival_times.push_back(now_);
    c.trace.send_times.push_back(o.last_send);
    c.trace.levels.push_back(o.level);
    c.trace.chunk_index.push_back(seq);
    c.trace.chunks.push_back({seq, now_, false});
    log(c.node, "chunk", d->name, wire_size(p));
    client_on_data(c, p_.aimd);
    advance_contiguous(ci);
    note_finished(ci);
    try_send(ci);
  }

  const Scenario& s_;
  const SimParams& p_;
  SimOptions opts_;
  std::mt19937_64 rng_;
  double loss_;
  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_timer_ = 1;
  std::priority_queue<Queued, std::vector<Queued>, Later> queue_;
  std::vector<Channel> channels_;
  std::map<std::pair<NodeId, NodeId>, std::size_t> channel_index_;
  std::vector<NodeState> nodes_;
  std::vector<ClientRuntime> clients_;
  std::map<NodeId, std::size_t> client_of_;
  std::vector<std::optional<double>> play_start_;
  std::vector<std::uint64_t> contiguous_;
  std::vector<bool> wake_pending_;
  std::vector<bool> finished_flag_;
  std::size_t finished_ = 0;
  NodeId optimizer_node_ = 0;
  OptimizerState opt_;
  std::uint64_t total_chunks_ = 0;
  SimCounters counters_;
  std::ostringstream log_;
};

}  // namespace

SimResult run_simulation(const Scenario& s, const SimOptions& opts) {
  require_valid(s);
  if (!(s.sim.duration_s > 0.0)) throw std::invalid_argument("run_simulation: duration must be > 0");
  if (s.graph.nodes_with_role(NodeRole::Server).size() != 1)
    throw StructuralError("run_simulation: exactly one server is required");
  Simulation sim(s, opts);
  return sim.run();
}

}  // namespace comets::sim
