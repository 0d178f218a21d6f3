#include <doctest.h>

#include <map>
#include <random>
#include <sstream>
#include <string>

#include "comets/message.hpp"
#include "comets/sim/client.hpp"
#include "comets/sim/name.hpp"
#include "comets/sim/simulator.hpp"
#include "comets/sim/tables.hpp"
#include "comets/topology_gen.hpp"
#include "support/generators.hpp"

using namespace comets;
using namespace comets::sim;

namespace {

// S(0) -> F(1) -> users 2..k+1, default ladder prefix, wide links.
Scenario star(std::size_t users, std::size_t levels, double capacity) {
  std::vector<NodeRole> roles{NodeRole::Server, NodeRole::Forwarder};
  std::vector<Edge> edges{{0, 1, capacity, 0.005}};
  std::vector<UserProfile> profiles;
  for (std::size_t u = 0; u < users; ++u) {
    const auto n = static_cast<NodeId>(roles.size());
    roles.push_back(NodeRole::User);
    edges.push_back({1, n, capacity, 0.005});
    std::vector<std::size_t> all(levels);
    for (std::size_t l = 0; l < levels; ++l) all[l] = l;
    profiles.push_back({n, all, 1.0});
  }
  Scenario s = testgen::make(testgen::default_prefix(levels), roles, edges, profiles);
  s.sim.duration_s = 20.0;
  return s;
}

struct Row {
  double time;
  std::string node, kind, name;
  std::uint64_t bytes;
};

std::vector<Row> parse_log(const std::string& text) {
  std::vector<Row> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    f.push_back(line.substr(start));
    rows.push_back({std::stod(f[0]), f[1], f[2], f[3], std::stoull(f[4])});
  }
  return rows;
}

std::pair<NodeId, NodeId> link_of(const std::string& label) {
  const auto gt = label.find('>');
  return {static_cast<NodeId>(std::stoul(label.substr(0, gt))),
          static_cast<NodeId>(std::stoul(label.substr(gt + 1)))};
}

double capacity_of(const Scenario& s, NodeId a, NodeId b) {
  if (auto e = s.graph.find_edge(a, b)) return s.graph.edge(*e).capacity_mbps;
  return s.graph.edge(*s.graph.find_edge(b, a)).capacity_mbps;
}

}  // namespace

TEST_SUITE("protocol-sim") {

TEST_CASE("names round trip through text") {
  const std::vector<Name> names{Name::range_interest("t1", 4), Name::range_interest("t1", 4, 99),
                                Name::video("t1", "1080p", 12), Name::report(3, 7),
                                Name::config(3, 8), Name::state(5, "lambda1", 2, 40)};
  CHECK(names[0].to_string() == "/ndn/video/t1/RangeInterest/chunk=4");
  CHECK(names[1].to_string() == "/ndn/video/t1/RangeInterest/chunk=4/nonce=99");
  CHECK(names[2].to_string() == "/ndn/video/t1/1080p/chunk=12");
  CHECK(names[3].to_string() == "/ndn/opt/report/forwarder=3/v=7");
  CHECK(names[4].to_string() == "/ndn/opt/config/forwarder=3/v=8");
  CHECK(names[5].to_string() == "/ndn/comets/state/node/5/lambda1/2/v=40");
  for (const auto& n : names) CHECK(Name::parse(n.to_string()) == n);
  CHECK(names[2].is_video());
  CHECK(names[0].is_range_interest());
  CHECK(names[2].number("chunk") == std::uint64_t{12});
  CHECK_THROWS_AS(Name(std::vector<std::string>{}), std::invalid_argument);
  CHECK_THROWS_AS(Name::parse("no-slash"), std::invalid_argument);
}

TEST_CASE("PIT examples") {
  Pit pit;
  const Name n = Name::video("t", "720p", 1);
  CHECK(pit.insert_or_aggregate(n, 7, 0.0, 4.0) == PitResult::Forwarded);
  CHECK(pit.insert_or_aggregate(n, 8, 1.0, 4.0) == PitResult::Aggregated);
  CHECK(pit.find(n)->faces.size() == 2);
  CHECK(pit.insert_or_aggregate(n, 8, 1.5, 4.0) == PitResult::Retransmission);
  CHECK(pit.find(n)->faces.size() == 2);
  CHECK(pit.insert_or_aggregate(n, 9, 6.0, 4.0) == PitResult::Forwarded);  // expired at 5.5
  CHECK(pit.find(n)->faces == std::vector<Face>{9});
  CHECK(pit.satisfy(n, 6.5) == std::vector<Face>{9});
  CHECK(pit.satisfy(n, 6.5).empty());
  CHECK(pit.size() == 0);
}

TEST_CASE("content store is LRU") {
  ContentStore cs(2);
  auto data = [](std::uint64_t k) { return Data{Name::video("t", "480p", k), 10, true, 0, {}, {}}; };
  cs.insert(data(1));
  cs.insert(data(2));
  CHECK(cs.lookup(data(1).name));
  cs.insert(data(3));  // evicts 2
  CHECK(cs.contains(data(1).name));
  CHECK(!cs.contains(data(2).name));
  CHECK(cs.contains(data(3).name));
  CHECK(cs.size() == 2);
}

TEST_CASE("backpressure examples") {
  const auto cat = ResolutionCatalog::default_ladder();
  const Name interest = Name::video("t", "1080p", 5);
  FaceQueue q{0.0, 100.0, 2, {0, 1, 2}};
  CHECK(!backpressure_check(q, 0.050, cat, "t", 6, interest));
  q.queued_bytes = 0.060 * 100e6 / 8.0;  // 60 ms at 100 Mbps
  const auto nack = backpressure_check(q, 0.050, cat, "t", 6, interest);
  REQUIRE(nack);
  CHECK(nack->reason == NackReason::RecommendResolution);
  CHECK(*nack->recommended == Name::video("t", "720p", 6));
  q.level = 0;
  const auto floor = backpressure_check(q, 0.050, cat, "t", 6, interest);
  REQUIRE(floor);
  CHECK(floor->reason == NackReason::Congestion);
  CHECK(!floor->recommended);
  CHECK_THROWS_AS(make_nack(interest, NackReason::RecommendResolution), std::invalid_argument);
}

TEST_CASE("timeout handling") {
  const AimdParams aimd;
  ClientRuntime c;
  c.done.assign(4, false);
  c.cwnd = 8;
  c.outstanding[0] = Outstanding{};
  CHECK(client_on_timeout(c, 0, aimd, 1.0) == TimeoutAction::Retransmit);
  CHECK(c.outstanding[0].attempts == 1);
  CHECK(c.cwnd == 4);
  CHECK(client_on_timeout(c, 0, aimd, 2.0) == TimeoutAction::Retransmit);
  CHECK(c.outstanding[0].attempts == 2);
  CHECK(client_on_timeout(c, 0, aimd, 3.0) == TimeoutAction::Suppress);
  CHECK(c.downgrade_pending);
  CHECK(!c.outstanding.count(0));
  CHECK(c.done[0]);
  CHECK(c.cwnd == 1);
  CHECK_THROWS_AS(client_on_timeout(c, 3, aimd, 4.0), std::logic_error);
}

TEST_CASE("timeout value and additive increase") {
  ClientRuntime c;
  CHECK(c.timeout(1.0, 0.05) == 4.0);
  c.on_rtt_sample(0.01);
  CHECK(c.timeout(1.0, 0.05) == 0.05);
  CHECK(c.timeout(1.0, 0.05, 2) == 0.2);
  const AimdParams aimd;
  c.cwnd = 2;
  c.window_limited = true;
  client_on_data(c, aimd);
  CHECK(c.cwnd == 2);
  client_on_data(c, aimd);
  CHECK(c.cwnd == 3);
  c.cwnd = aimd.max_window;
  c.window_limited = true;
  for (int i = 0; i < 64; ++i) client_on_data(c, aimd);
  CHECK(c.cwnd == aimd.max_window);
}

TEST_CASE("downgrade advertises only lower levels") {
  ClientRuntime c;
  c.supported = {0, 1, 2};
  c.level = 2;
  CHECK(c.advertised() == std::vector<std::size_t>{0, 1, 2});
  c.downgrade_pending = true;
  CHECK(c.advertised() == std::vector<std::size_t>{0, 1});
}

TEST_CASE("single client with ample capacity") {
  Scenario s = star(1, 3, 1e5);
  const auto r = run_simulation(s);
  REQUIRE(r.traces.size() == 1);
  const auto& t = r.traces[0];
  const std::size_t chunks = static_cast<std::size_t>(s.sim.duration_s / s.sim.chunk_s);
  CHECK(t.levels.size() == chunks);
  for (std::size_t l : t.levels) CHECK(l == 2);
  CHECK(r.counters.retransmissions == 0);
  CHECK(r.counters.skipped_chunks == 0);
  CHECK(r.counters.backpressure_nacks == 0);

  // Range Interest at 0, report at the collect window, solve two windows
  // later, decision after the optimizer delay, then config down, nack down,
  // Interest up, Data down: four one-way link delays. One chunk fills the
  // startup threshold; the chunk crosses two links at 1e5 Mbps.
  const double d = 0.005;
  const double chunk_tx = 6.0 * s.sim.chunk_s / 1e5;
  const double expect = 3 * s.sim.collect_window_s + s.sim.optimizer_delay_s + 4 * d;
  CHECK(r.metrics.clients[0].startup_s >= expect);
  CHECK(r.metrics.clients[0].startup_s <= expect + 2 * chunk_tx + 1e-5);
}

TEST_CASE("three clients behind one forwarder share each upstream Interest") {
  const Scenario s = star(3, 3, 1e5);
  const auto r = run_simulation(s);
  std::map<std::string, int> up, down;
  for (const auto& row : parse_log(r.event_log)) {
    if (row.name.find("/ndn/video/title/") != 0 || row.name.find("RangeInterest") != std::string::npos)
      continue;
    if (row.node == "1>0" && row.kind == "tx_interest") ++up[row.name];
    if (row.node.rfind("1>", 0) == 0 && row.node != "1>0" && row.kind == "tx_data") ++down[row.name];
  }
  REQUIRE(!up.empty());
  for (const auto& [name, k] : up) {
    CHECK(k == 1);
    CHECK(down[name] == 3);
  }
  CHECK(r.counters.upstream_video_interests == up.size());
}

TEST_CASE("same seed gives byte-identical logs") {
  Scenario s = scale_users(layered_tree(LayeredTreeOptions{}, 3), 20);
  s.sim.loss_rate = 0.02;
  s.sim.duration_s = 20.0;
  const auto a = run_simulation(s);
  const auto b = run_simulation(s);
  CHECK(a.event_log == b.event_log);
  CHECK(!a.event_log.empty());
  s.sim.seed = 2;
  CHECK(run_simulation(s).event_log != a.event_log);
}

TEST_CASE("property: channels respect capacity and conserve packets") {
  for (double loss : {0.0, 0.05}) {
    Scenario s = scale_users(layered_tree(LayeredTreeOptions{}, 5), 30);
    s.sim.loss_rate = loss;
    s.sim.duration_s = 20.0;
    const auto r = run_simulation(s);
    const auto rows = parse_log(r.event_log);
    std::map<std::string, double> last_rx;
    std::map<std::string, std::int64_t> balance;  // tx minus rx minus drop, per link and packet
    std::size_t drops = 0;
    for (const auto& row : rows) {
      if (row.node.find('>') == std::string::npos) continue;
      const auto [a, b] = link_of(row.node);
      const std::string key = row.node + "|" + row.name;
      if (row.kind.rfind("tx_", 0) == 0) {
        ++balance[key + "|" + row.kind.substr(3)];
      } else if (row.kind.rfind("rx_", 0) == 0) {
        auto& bal = balance[key + "|" + row.kind.substr(3)];
        CHECK(bal > 0);  // every delivery was sent first
        --bal;
        const double spacing = static_cast<double>(row.bytes) * 8.0 / (capacity_of(s, a, b) * 1e6);
        auto it = last_rx.find(row.node);
        if (it != last_rx.end()) CHECK(row.time - it->second >= spacing - 2e-9);
        last_rx[row.node] = row.time;
      } else if (row.kind == "drop") {
        ++drops;
      }
    }
    std::int64_t in_flight = 0;
    for (const auto& [k, v] : balance) {
      CHECK(v >= 0);
      in_flight += v;
    }
    CHECK(static_cast<std::uint64_t>(in_flight) >= drops);
    if (loss == 0.0) CHECK(drops == 0);
    CHECK(r.counters.packets_dropped == drops);
  }
}

TEST_CASE("distributed mode runs and exchanges state messages") {
  Scenario s = scale_users(layered_tree(LayeredTreeOptions{}, 1), 12);
  s.sim.duration_s = 12.0;
  SimOptions o;
  o.mode = DualMode::Distributed;
  o.optimizer.t_max = 50;
  const auto r = run_simulation(s, o);
  CHECK(r.counters.state_messages > 0);
  CHECK(r.counters.state_bytes == r.counters.state_messages * encoded_size(s.catalog.size()));
  CHECK(!r.counters.horizon_reached);
}

TEST_CASE("restrict_users renumbers densely") {
  const Scenario s = star(3, 2, 100);
  std::vector<NodeId> mapping;
  const Scenario r = restrict_users(s, {{4, {0}, 2.0}}, mapping);
  CHECK(r.graph.node_count() == 3);
  CHECK(mapping == std::vector<NodeId>{0, 1, 4});
  CHECK(r.users.size() == 1);
  CHECK(r.users[0].node == 2);
  CHECK(r.users[0].weight == 2.0);
  CHECK(validate(r).ok());
}

TEST_CASE("preconditions") {
  Scenario s = star(1, 2, 100);
  s.sim.duration_s = 0.0;
  CHECK_THROWS(run_simulation(s));
  Scenario two = testgen::make(testgen::catalog({1}), {NodeRole::Server, NodeRole::Server, NodeRole::User},
                               {{0, 2, 10}, {1, 2, 10}}, {{2, {0}, 1}});
  CHECK_THROWS_AS(run_simulation(two), StructuralError);
}

}  // TEST_SUITE
