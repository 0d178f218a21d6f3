#include <doctest.h>

#include <random>
#include <set>

#include "comets/oracle.hpp"
#include "comets/reconstruct.hpp"
#include "comets/topology_gen.hpp"
#include "support/generators.hpp"

using namespace comets;

namespace {

// S(0) -> F(1) -> {U(2), U(3)}; edges 0: S-F, 1: F-U2, 2: F-U3.
Scenario fan() {
  return testgen::make(testgen::catalog({1, 2}),
                       {NodeRole::Server, NodeRole::Forwarder, NodeRole::User, NodeRole::User},
                       {{0, 1, 10}, {1, 2, 10}, {1, 3, 10}}, {{2, {0, 1}, 1}, {3, {0, 1}, 1}});
}

}  // namespace

TEST_SUITE("feasibility-reconstruct") {

TEST_CASE("hand trace") {
  const Scenario s = fan();
  auto x = make_selection(s);
  auto y = make_transmission(s);
  y(0, 0) = 1;
  y(0, 1) = 0.6;
  for (EdgeId e : {1, 2}) y(e, 0) = y(e, 1) = 1;
  const auto r = reconstruct(s, x, y);
  CHECK(r.y(0, 0) == 1);
  CHECK(r.y(0, 1) == 0);
  CHECK(r.x(1, 0) == 1);
  CHECK(r.x(1, 1) == 0);
  for (EdgeId e : {1, 2}) {
    CHECK(r.y(e, 0) == 1);
    CHECK(r.y(e, 1) == 0);
  }
  for (NodeId u : {2, 3}) {
    CHECK(r.x(u, 0) == 1);
    CHECK(r.x(u, 1) == 0);
  }
  CHECK(r.unserved_users.empty());
  CHECK(check(s, r.x, r.y, true).empty());
}

TEST_CASE("integral feasible input is kept") {
  const Scenario s = fan();
  auto y = make_transmission(s);
  y(0, 1) = 1;
  y(1, 1) = 1;
  y(2, 1) = 1;
  const auto r = reconstruct(s, make_selection(s), y);
  CHECK(r.y == y);
  CHECK(r.x(1, 1) == 1);
  CHECK(r.x(2, 1) == 1);
  CHECK(r.x(3, 1) == 1);
  for (std::size_t l = 0; l < 2; ++l) CHECK(r.x(0, l) == 1);
}

TEST_CASE("zero transmissions leave every user unserved") {
  const Scenario s = fan();
  const auto r = reconstruct(s, make_selection(s), make_transmission(s));
  CHECK(r.unserved_users == std::vector<NodeId>{2, 3});
  for (NodeId u : {2, 3})
    for (std::size_t l = 0; l < 2; ++l) CHECK(r.x(u, l) == 0);
  const auto rep = check(s, r.x, r.y, true);
  CHECK(rep.total() == rep.count(ConstraintFamily::One));
}

TEST_CASE("shape mismatch throws") {
  const Scenario s = fan();
  CHECK_THROWS_AS(reconstruct(s, SelectionState(1, 2), make_transmission(s)), std::invalid_argument);
}

TEST_CASE("property: 1000 random relaxed inputs give integral points feasible up to unserved users") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    const Scenario s = testgen::random_dag(rng, 4, 5, 6);
    const auto x = testgen::random_x(rng, s);
    const auto y = testgen::random_relaxed_y(rng, s);
    const auto r = reconstruct(s, x, y);
    const auto rep = check(s, r.x, r.y, true);
    for (auto f : {ConstraintFamily::Srv, ConstraintFamily::CapUsr, ConstraintFamily::FwdOut,
                   ConstraintFamily::FwdIn, ConstraintFamily::Bw, ConstraintFamily::Int})
      CHECK_MESSAGE(rep.count(f) == 0, to_string(f));
    std::set<NodeId> flagged;
    for (const auto& e : rep.entries(ConstraintFamily::One)) flagged.insert(*e.node);
    CHECK(flagged == std::set<NodeId>(r.unserved_users.begin(), r.unserved_users.end()));

    // capacity never increases
    for (EdgeId e = 0; e < s.graph.edge_count(); ++e)
      CHECK(link_load(s, r.y, e) <= link_load(s, y, e) + 1e-12);

    // deterministic
    const auto again = reconstruct(s, x, y);
    CHECK(again.x == r.x);
    CHECK(again.y == r.y);
    CHECK(again.unserved_users == r.unserved_users);
  }
}

TEST_CASE("property: every node is processed after its upstream nodes") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 300; ++trial) {
    const Scenario s = testgen::random_dag(rng, 3, 6, 6);
    const auto r = reconstruct(s, testgen::random_x(rng, s), testgen::random_y(rng, s));
    REQUIRE(r.order.size() == s.graph.node_count());
    std::vector<std::size_t> pos(s.graph.node_count());
    for (std::size_t i = 0; i < r.order.size(); ++i) pos[r.order[i]] = i;
    for (const auto& e : s.graph.edges()) CHECK(pos[e.from] < pos[e.to]);
    const auto depth = compute_depths(s.graph);
    for (std::size_t i = 1; i < r.order.size(); ++i) {
      const NodeId a = r.order[i - 1], b = r.order[i];
      CHECK((depth[a] < depth[b] || (depth[a] == depth[b] && a < b)));
    }
  }
}

TEST_CASE("optimize sandwich on oracle-sized trees") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 30; ++trial) {
    const Scenario s = random_tree(testgen::small_tree_options(rng), rng());
    DualOptions o;
    o.t_max = 200;
    const auto r = optimize(s, o);
    const auto opt = ilp_optimum_tree(s);
    if (!opt) {
      CHECK(!r.feasible);
      continue;
    }
    if (r.feasible) CHECK(r.z_best <= opt->z + 1e-9);
    CHECK(opt->z <= r.dual_bound + 1e-9);
    CHECK(r.gap >= -1e-12);
    const auto j = r.gap_json();
    CHECK(j.contains("gap_final"));
  }
}

}  // TEST_SUITE
