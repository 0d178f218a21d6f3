#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "comets/dual.hpp"
#include "comets/message.hpp"
#include "comets/oracle.hpp"
#include "comets/topology_gen.hpp"
#include "support/generators.hpp"

using namespace comets;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_SUITE("dual-optimizer") {

TEST_CASE("server edge knapsack examples") {
  const std::vector<double> lam{6, 4, 5}, B{2, 3, 5};
  const auto y = solve_server_edge(lam, B, 6);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 1.0);
  CHECK(y[2] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(dot(lam, y) == doctest::Approx(11.0).epsilon(1e-12));

  CHECK(solve_server_edge(std::vector<double>{0, 0}, std::vector<double>{1, 2}, 3) ==
        std::vector<double>{0, 0});
  CHECK(solve_server_edge(std::vector<double>{1, 1}, std::vector<double>{1, 2}, 10) ==
        std::vector<double>{1, 1});
  CHECK_THROWS_AS(solve_server_edge(lam, B, 0), std::invalid_argument);
  CHECK_THROWS_AS(solve_server_edge(lam, std::vector<double>{2, 0, 5}, 6), std::invalid_argument);
}

TEST_CASE("cumulative weight equal to capacity leaves the cut item at 0") {
  const auto y = solve_knapsack(std::vector<double>{3, 2, 1}, std::vector<double>{1, 1, 1}, 2);
  CHECK(y == std::vector<double>{1, 1, 0});
}

TEST_CASE("forwarder edge knapsack examples") {
  const std::vector<double> B{2, 3, 5};
  const auto y = solve_forwarder_edge(std::vector<double>{7, 5, 5.5}, std::vector<double>{1, 1, 0.5}, B, 6);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 1.0);
  CHECK(y[2] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(solve_forwarder_edge(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 3}, B, 6) ==
        std::vector<double>{0, 0, 0});
  CHECK(solve_forwarder_edge(std::vector<double>{2}, std::vector<double>{0}, std::vector<double>{4}, 2) ==
        std::vector<double>{0.5});
}

TEST_CASE("user subproblem examples") {
  const std::vector<double> Q{1, 2, 3};
  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(solve_user(1, Q, std::vector<double>{0, 0, 0}, all) == std::vector<double>{0, 0, 1});
  CHECK(solve_user(1, Q, std::vector<double>{0, 0, 0}, std::vector<std::size_t>{0, 1}) ==
        std::vector<double>{0, 1, 0});
  // scores 2, 1, 1
  CHECK(solve_user(2, Q, std::vector<double>{0, 3, 5}, all) == std::vector<double>{1, 0, 0});
  // scores all 0
  CHECK(solve_user(1, Q, std::vector<double>{1, 2, 3}, std::vector<std::size_t>{1, 2}) ==
        std::vector<double>{0, 1, 0});
  CHECK_THROWS_AS(solve_user(1, Q, std::vector<double>{0, 0, 0}, std::vector<std::size_t>{}),
                  std::invalid_argument);
}

TEST_CASE("forwarder selection examples") {
  CHECK(solve_forwarder_selection(std::vector<double>{0, 0}, std::vector<double>{0, 0}) ==
        std::vector<double>{0, 0});
  CHECK(solve_forwarder_selection(std::vector<double>{0, 1}, std::vector<double>{0, 3}) ==
        std::vector<double>{0, 1});
  CHECK(solve_forwarder_selection(std::vector<double>{1, 1}, std::vector<double>{1, 1}) ==
        std::vector<double>{0, 0});
}

TEST_CASE("subgradient examples") {
  const Scenario s = testgen::chain(testgen::catalog({1, 2}), 10, 10, {0, 1});
  auto x = make_selection(s);
  auto y = make_transmission(s);
  x(1, 0) = 1;
  x(2, 0) = 1;
  y(0, 0) = 1;
  y(1, 0) = 1;
  auto d = subgradients(s, x, y);
  for (double v : d.d1.values()) CHECK(v == 0.0);

  x = make_selection(s);
  y = make_transmission(s);
  y(1, 1) = 1;  // F -> U carries level 2, F holds nothing
  d = subgradients(s, x, y);
  CHECK(d.d2(1, 1) == -1.0);  // d2 = x[f] - y; the update then raises lambda2

  x = make_selection(s);
  y = make_transmission(s);
  x(2, 0) = 1;
  d = subgradients(s, x, y);
  CHECK(d.d1(2, 0) == -1.0);
}

TEST_CASE("multiplier update examples") {
  const Scenario s = testgen::chain(testgen::catalog({1}), 10, 10, {0});
  DualState lam = DualState::zeros(s);
  Subgradients d{LevelMatrix<NodeRowsTag>(3, 1), LevelMatrix<EdgeRowsTag>(2, 1)};
  lam.lambda1(1, 0) = 2;
  d.d1(1, 0) = 3;
  CHECK(update_multipliers(lam, d, 0.5, 1).lambda1(1, 0) == 0.5);
  lam.lambda1(1, 0) = 0.1;
  d.d1(1, 0) = 1;
  CHECK(update_multipliers(lam, d, 0.5, 1).lambda1(1, 0) == 0.0);
  d.d1(1, 0) = 0;
  CHECK(update_multipliers(lam, d, 0.5, 1) == lam);
}

TEST_CASE("dual value at zero multipliers") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Scenario s = testgen::random_dag(rng, 4, 4, 6);
    const DualState zero = DualState::zeros(s);
    const Maximizers m = solve_subproblems(s, zero);
    double expect = 0.0;
    const auto Q = s.catalog.qualities();
    for (const auto& u : s.users) {
      double best = -1e300;
      for (std::size_t l : u.supported_levels) best = std::max(best, u.weight * Q[l]);
      expect += best;
    }
    CHECK(dual_value(s, zero, m.x, m.y) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("step schedule") {
  CHECK_THROWS_AS(StepSchedule(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(StepSchedule(1, -1), std::invalid_argument);
  const StepSchedule st(2.0, 3.0);
  CHECK(st.alpha(4) == 0.5);
  CHECK(st.beta(3) == 1.0);
  // harmonic lower bound: sum_{t<=2^k} 1/t >= 1 + k/2, so any M is exceeded
  double sum = 0.0, sq = 0.0;
  std::size_t t = 1;
  for (int k = 0; k <= 16; ++k) {
    for (; t <= (std::size_t{1} << k); ++t) {
      sum += st.alpha(t);
      sq += st.alpha(t) * st.alpha(t);
    }
    CHECK(sum >= 2.0 * (1.0 + k / 2.0) - 1e-9);
  }
  CHECK(sq <= 4.0 * std::numbers::pi * std::numbers::pi / 6.0);
}

TEST_CASE("single user on a direct edge converges to the top level") {
  const Scenario s = testgen::make(testgen::catalog({1, 2, 3}), {NodeRole::Server, NodeRole::User},
                                   {{0, 1, 10}}, {{1, {0, 2}, 1.0}});
  const auto tr = run(s, DualOptions{});
  REQUIRE(!tr.rows.empty());
  const auto& last = tr.rows.back().x;
  CHECK(last(1, 2) == 1.0);
  const auto opt = ilp_optimum_tree(s);
  REQUIRE(opt);
  CHECK(opt->x(1, 2) == 1.0);
}

TEST_CASE("infinite eps stops after one iteration") {
  DualOptions o;
  o.eps = std::numeric_limits<double>::infinity();
  const auto tr = run(layered_tree(LayeredTreeOptions{}, 1), o);
  CHECK(tr.rows.size() == 1);
  CHECK(tr.converged);
}

TEST_CASE("trace length never exceeds t_max") {
  DualOptions o;
  o.t_max = 7;
  o.eps = 1e-300;
  CHECK(run(testgen::chain(testgen::catalog({1, 2}), 1.5, 1.5, {0, 1}), o).rows.size() <= 7);
}

TEST_CASE("centralized and distributed traces are identical") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Scenario s = testgen::random_dag(rng, 4, 5, 6);
    DualOptions o;
    o.t_max = 60;
    o.mode = DualMode::Centralized;
    const auto a = run(s, o);
    o.mode = DualMode::Distributed;
    const auto b = run(s, o);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].g == b.rows[i].g);
      CHECK(a.rows[i].change == b.rows[i].change);
      CHECK(a.rows[i].x == b.rows[i].x);
      CHECK(a.rows[i].y == b.rows[i].y);
    }
    CHECK(a.final_state == b.final_state);
    CHECK(b.traffic.messages > 0);
  }
}

TEST_CASE("trace csv") {
  const auto tr = run(testgen::chain(testgen::catalog({1, 2}), 10, 10, {0, 1}), DualOptions{});
  std::ostringstream a, b;
  tr.write_csv(a);
  tr.write_csv(b, true);
  CHECK(a.str().rfind("t,g,change\n", 0) == 0);
  CHECK(b.str().rfind("t,g,change,wall_ms\n", 0) == 0);
}

TEST_CASE("property: knapsack exchange optimality and one fractional coordinate") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t L = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const auto lam1 = random_vec(rng, L, -2, 10);
    const auto lam2 = random_vec(rng, L, 0, 3);
    const auto B = random_vec(rng, L, 0.5, 20);
    const double C = std::uniform_real_distribution<double>(0.1, 60)(rng);
    const bool server = trial % 2 == 0;
    std::vector<double> coef(L);
    for (std::size_t l = 0; l < L; ++l) coef[l] = server ? lam1[l] : lam1[l] - lam2[l];
    const auto y = server ? solve_server_edge(lam1, B, C) : solve_forwarder_edge(lam1, lam2, B, C);

    double used = 0.0;
    std::size_t fractional = 0;
    for (std::size_t l = 0; l < L; ++l) {
      CHECK(y[l] >= 0.0);
      CHECK(y[l] <= 1.0);
      used += B[l] * y[l];
      if (y[l] > 0.0 && y[l] < 1.0) ++fractional;
    }
    CHECK(used <= C + 1e-9);
    CHECK(fractional <= 1);

    const double base = dot(coef, y);
    const double delta = 1e-3;
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        if (i == j) continue;
        // move delta Mbps of capacity from item i to item j
        const double di = std::min(delta / B[i], y[i]);
        const double dj = std::min(di * B[i] / B[j], 1.0 - y[j]);
        if (di <= 0.0 || dj <= 0.0) continue;
        auto z = y;
        z[i] -= di;
        z[j] += dj;
        CHECK(dot(coef, z) <= base + 1e-9);
      }
      // spend spare capacity on item i
      const double spare = C - used;
      if (spare > 1e-12 && y[i] < 1.0) {
        auto z = y;
        z[i] = std::min(1.0, y[i] + std::min(delta, spare) / B[i]);
        CHECK(dot(coef, z) <= base + 1e-9);
      }
    }
  }
}

TEST_CASE("property: user and selection outputs are binary") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t L = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const auto Q = random_vec(rng, L, 1, 5);
    const auto l1 = random_vec(rng, L, 0, 5);
    const auto l2 = random_vec(rng, L, 0, 5);
    std::vector<std::size_t> sup;
    for (std::size_t l = 0; l < L; ++l)
      if (rng() % 2) sup.push_back(l);
    if (sup.empty()) sup.push_back(L - 1);
    const auto xu = solve_user(1.5, Q, l1, sup);
    double total = 0.0;
    for (double v : xu) {
      CHECK((v == 0.0 || v == 1.0));
      total += v;
    }
    CHECK(total == 1.0);
    for (double v : solve_forwarder_selection(l1, l2)) CHECK((v == 0.0 || v == 1.0));
  }
}

TEST_CASE("property: projection keeps multipliers non-negative") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int trial = 0; trial < 200; ++trial) {
    const Scenario s = testgen::random_dag(rng, 3, 4, 4);
    DualState lam = DualState::zeros(s);
    for (auto& v : lam.lambda1.values()) v = std::abs(u(rng));
    for (auto& v : lam.lambda2.values()) v = std::abs(u(rng));
    Subgradients d{LevelMatrix<NodeRowsTag>(lam.lambda1.rows(), lam.lambda1.levels()),
                   LevelMatrix<EdgeRowsTag>(lam.lambda2.rows(), lam.lambda2.levels())};
    for (auto& v : d.d1.values()) v = u(rng);
    for (auto& v : d.d2.values()) v = u(rng);
    const auto next = update_multipliers(lam, d, std::abs(u(rng)), std::abs(u(rng)));
    for (double v : next.lambda1.values()) CHECK(v >= 0.0);
    for (double v : next.lambda2.values()) CHECK(v >= 0.0);
  }
}

TEST_CASE("property: decomposition consistency along the iteration") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 30; ++trial) {
    const Scenario s = testgen::random_dag(rng, 4, 5, 6);
    const StepSchedule st;
    DualState lam = DualState::zeros(s);
    for (std::size_t t = 1; t <= 40; ++t) {
      const Maximizers m = solve_subproblems(s, lam);
      const double g1 = dual_value_groups(s, lam, m.x, m.y);
      const double g2 = lagrangian(s, lam, m.x, m.y);
      CHECK(std::abs(g1 - g2) <= 1e-9 * std::max(1.0, std::abs(g1)));
      lam = update_multipliers(lam, subgradients(s, m.x, m.y), st.alpha(t), st.beta(t));
    }
  }
}

TEST_CASE("property: weak duality and monotone bound on oracle-sized trees") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 40; ++trial) {
    const Scenario s = random_tree(testgen::small_tree_options(rng), rng());
    DualOptions o;
    o.t_max = 150;
    const auto tr = run(s, o);
    const auto opt = ilp_optimum_tree(s);
    double running = std::numeric_limits<double>::infinity();
    for (const auto& row : tr.rows) {
      const double next = std::min(running, row.g);
      CHECK(next <= running);
      running = next;
      if (opt) CHECK(row.g >= opt->z - 1e-9);
    }
    CHECK(tr.best_bound() == running);
  }
}

}  // TEST_SUITE

TEST_SUITE("message-codec") {

TEST_CASE("encoded sizes") {
  CHECK(encode_message({1, 2, std::vector<double>(12, 0.5)}).size() == 104);
  CHECK(encode_message({1, 2, {0.5}}).size() == 16);
  CHECK(encoded_size(12) == 104);
  CHECK_THROWS_AS(encode_message({1, 2, {}}), std::invalid_argument);
}

TEST_CASE("little-endian layout") {
  const auto b = encode_message({0x01020304u, 5, {1.0}});
  CHECK(b[0] == 0x04);
  CHECK(b[3] == 0x01);
  CHECK(b[4] == 5);
  CHECK(b[15] == 0x3f);  // 1.0 = 0x3ff0000000000000
  CHECK(b[14] == 0xf0);
}

TEST_CASE("property: round trip") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t L = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    MultiplierMessage m{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                        random_vec(rng, L, -1e6, 1e6)};
    CHECK(decode_message(encode_message(m), L) == m);
  }
}

TEST_CASE("truncated and over-long buffers") {
  auto b = encode_message({1, 2, {1.0, 2.0}});
  auto shorter = b;
  shorter.pop_back();
  CHECK_THROWS_AS(decode_message(shorter, 2), DecodeError);
  b.push_back(0);
  CHECK_THROWS_AS(decode_message(b, 2), DecodeError);
}

}  // TEST_SUITE
