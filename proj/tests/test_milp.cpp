#include <doctest.h>

#include <cmath>
#include <random>

#include "comets/milp.hpp"
#include "support/generators.hpp"

using namespace comets;

namespace {

// S(0) -> F(1) -> {U(2), U(3)}, B = [1, 2], heights 240/480.
Scenario two_users(double w1, double w2) {
  return testgen::make(testgen::catalog({1, 2}),
                       {NodeRole::Server, NodeRole::Forwarder, NodeRole::User, NodeRole::User},
                       {{0, 1, 10}, {1, 2, 10}, {1, 3, 10}}, {{2, {0, 1}, w1}, {3, {0, 1}, w2}});
}

}  // namespace

TEST_SUITE("milp-core") {

TEST_CASE("objective examples") {
  const Scenario s = two_users(1, 2);
  auto x = make_selection(s);
  CHECK(objective(s, x) == 0.0);
  x(2, 0) = 1;
  x(3, 1) = 1;
  CHECK(objective(s, x) == doctest::Approx(1.0 + 2.0 * (1.0 + std::log(2.0))).epsilon(1e-14));
  CHECK(std::abs(objective(s, x) - 4.386294) < 1e-6);
  CHECK_THROWS_AS(objective(s, SelectionState(2, 2)), std::invalid_argument);
}

TEST_CASE("hand-built feasible point on a chain") {
  const Scenario s = testgen::chain(testgen::catalog({1, 2}), 10, 10, {0, 1});
  auto x = make_selection(s);
  auto y = make_transmission(s);
  x(0, 0) = x(0, 1) = 1;  // server
  x(1, 1) = 1;            // forwarder holds level 2
  x(2, 1) = 1;            // user plays level 2
  y(0, 1) = 1;
  y(1, 1) = 1;
  CHECK(check(s, x, y, true).empty());
}

TEST_CASE("C-FWD-OUT residual") {
  const Scenario s = testgen::chain(testgen::catalog({1, 2}), 10, 10, {0, 1});
  auto x = make_selection(s);
  auto y = make_transmission(s);
  x(0, 0) = x(0, 1) = 1;
  x(1, 0) = 0;
  y(1, 0) = 1;  // F -> U carries level 1 which F does not hold
  x(2, 0) = 1;
  const auto r = check(s, x, y, true);
  REQUIRE(r.count(ConstraintFamily::FwdOut) == 1);
  const auto& e = r.entries(ConstraintFamily::FwdOut).front();
  CHECK(e.residual == 1.0);
  CHECK(e.edge == EdgeId{1});
  CHECK(e.level == std::size_t{0});
}

TEST_CASE("C-BW residual") {
  const Scenario s = testgen::chain(testgen::catalog({2, 3}), 4.5, 10, {0, 1});
  auto x = make_selection(s);
  auto y = make_transmission(s);
  y(0, 0) = y(0, 1) = 1;  // 5 Mbps on a 4.5 Mbps edge
  const auto r = check(s, x, y, false);
  REQUIRE(r.count(ConstraintFamily::Bw) == 1);
  CHECK(r.entries(ConstraintFamily::Bw).front().residual == doctest::Approx(0.5));
}

TEST_CASE("residual conventions") {
  const Scenario s = testgen::chain(testgen::catalog({1, 2}), 10, 10, {0});
  auto x = make_selection(s);
  auto y = make_transmission(s);
  x(0, 0) = x(0, 1) = 1;
  x(2, 0) = 0.3;
  x(2, 1) = 0.3;  // unsupported level and a sum of 0.6
  const auto r = check(s, x, y, true);
  CHECK(r.entries(ConstraintFamily::One).front().residual == doctest::Approx(0.4));
  CHECK(r.entries(ConstraintFamily::CapUsr).front().residual == doctest::Approx(0.3));
  CHECK(r.count(ConstraintFamily::Int) == 2);
  for (const auto& e : r.entries(ConstraintFamily::Int)) CHECK(e.residual == doctest::Approx(0.3));
  CHECK(r.max_residual() == doctest::Approx(0.4));
  CHECK(r.to_json().is_object());
}

TEST_CASE("server rows must be all ones") {
  const Scenario s = testgen::chain(testgen::catalog({1, 2}), 10, 10, {0});
  auto x = make_selection(s);
  x(0, 0) = 1;
  CHECK(check(s, x, make_transmission(s), false).count(ConstraintFamily::Srv) == 1);
}

TEST_CASE("shape mismatch throws") {
  const Scenario s = testgen::chain(testgen::catalog({1, 2}), 10, 10, {0});
  CHECK_THROWS_AS(check(s, SelectionState(3, 1), make_transmission(s), false), std::invalid_argument);
  CHECK_THROWS_AS(check(s, make_selection(s), TransmissionState(1, 2), false), std::invalid_argument);
}

TEST_CASE("link_load examples") {
  const Scenario s = testgen::chain(testgen::catalog({2, 3}), 10, 10, {0, 1});
  auto y = make_transmission(s);
  CHECK(link_load(s, y, 0) == 0.0);
  y(0, 0) = 1;
  y(0, 1) = 0.5;
  CHECK(link_load(s, y, 0) == 3.5);
  y(0, 1) = 1;
  CHECK(link_load(s, y, 0) == 5.0);
  CHECK_THROWS_AS(link_load(s, y, 9), std::out_of_range);
}

TEST_CASE("property: objective is linear") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Scenario s = testgen::random_dag(rng, 4, 4, 6);
    const auto x1 = testgen::random_x(rng, s);
    const auto x2 = testgen::random_x(rng, s);
    const double a = u(rng);
    auto mix = make_selection(s);
    for (std::size_t i = 0; i < mix.values().size(); ++i)
      mix.values()[i] = a * x1.values()[i] + (1 - a) * x2.values()[i];
    const double lhs = objective(s, mix);
    const double rhs = a * objective(s, x1) + (1 - a) * objective(s, x2);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("property: reported residuals are positive and flagged exactly when violated") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Scenario s = testgen::random_dag(rng, 3, 4, 4);
    const auto x = testgen::random_x(rng, s);
    const auto y = testgen::random_y(rng, s);
    const auto r = check(s, x, y, false);
    for (auto f : kAllFamilies)
      for (const auto& e : r.entries(f)) CHECK(e.residual > kFeasibilityTol);
    // C-BW is recomputed independently from link_load
    std::size_t over = 0;
    for (EdgeId e = 0; e < s.graph.edge_count(); ++e)
      if (link_load(s, y, e) - s.graph.edge(e).capacity_mbps > kFeasibilityTol) ++over;
    CHECK(r.count(ConstraintFamily::Bw) == over);
  }
}

}  // TEST_SUITE
