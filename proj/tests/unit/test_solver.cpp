#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "impulse/solver.hpp"
#include "impulse/random.hpp"

using namespace impulse;
using impulse::testing::g1;
using impulse::testing::g2;
using impulse::testing::g3;

namespace {

ValueField random_field(Rng& rng, std::size_t n, double lo, double hi) {
  ValueField v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Truncated Neumann series for an uncontrolled chain; independent of the LU
// path in evaluate_policies.
ValueField neumann_value(const ImpulseGame& g) {
  const std::size_t n = g.num_states();
  ValueField total(n, 0.0);
  ValueField term(n);
  for (std::size_t s = 0; s < n; ++s) term[s] = g.reward(s, 0, 0);
  double scale = 1.0;
  for (int k = 0; k < 2000 && scale > 1e-18; ++k) {
    for (std::size_t s = 0; s < n; ++s) total[s] += scale * term[s];
    ValueField next(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const auto row = g.kernel(s, 0, 0);
      for (std::size_t t = 0; t < n; ++t) next[s] += row[t] * term[t];
    }
    term = next;
    scale *= g.gamma();
  }
  return total;
}

// Independently coded single-agent impulse-control value iteration.
ValueField single_agent_value(const ImpulseGame& g, int sweeps) {
  const std::size_t n = g.num_states();
  ValueField v(n, 0.0);
  for (int k = 0; k < sweeps; ++k) {
    ValueField next(n);
    for (std::size_t s = 0; s < n; ++s) {
      double cont = g.reward(s, 0, 0);
      const auto row0 = g.kernel(s, 0, 0);
      for (std::size_t t = 0; t < n; ++t) cont += g.gamma() * row0[t] * v[t];
      double best = cont;
      for (int a = 1; a < static_cast<int>(g.num_actions1()); ++a) {
        double val = g.reward(s, a, 0) - g.cost1(s, a);
        const auto row = g.kernel(s, a, 0);
        for (std::size_t t = 0; t < n; ++t) val += g.gamma() * row[t] * v[t];
        best = std::max(best, val);
      }
      next[s] = best;
    }
    v = next;
  }
  return v;
}

// Copy of `g` with Player 2's costly actions removed.
ImpulseGame drop_player2(const ImpulseGame& g) {
  ImpulseGame out(g.num_states(), g.num_actions1(), 1, g.gamma(), g.cost_floor());
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    for (int a = 0; a < static_cast<int>(g.num_actions1()); ++a) {
      out.reward(s, a, 0) = g.reward(s, a, 0);
      const auto src = g.kernel(s, a, 0);
      std::copy(src.begin(), src.end(), out.kernel(s, a, 0).begin());
    }
    for (int a = 1; a < static_cast<int>(g.num_actions1()); ++a)
      out.cost1(s, a) = g.cost1(s, a);
  }
  return out;
}

}  // namespace

TEST_CASE("intervention operators on G1") {
  const ImpulseGame g = g1();
  auto r = m1(g, {0.0}, 0);
  CHECK(r.value == doctest::Approx(1.5));
  CHECK(r.action == 1);
  r = m1(g, {0.6}, 0);
  CHECK(r.value == doctest::Approx(1.8));
  r = m2(g, {0.0}, 0);
  CHECK(r.value == doctest::Approx(0.3));
  CHECK(r.action == 1);
  r = m2(g, {0.6}, 0);
  CHECK(r.value == doctest::Approx(0.6));
}

TEST_CASE("empty action sets yield infinite sentinels") {
  const ImpulseGame none = random_game(2, 0, 0, 1);
  const auto r1 = m1(none, {0.0, 0.0}, 0);
  CHECK_FALSE(r1.available());
  CHECK(r1.value == -std::numeric_limits<double>::infinity());
  const auto r2 = m2(none, {0.0, 0.0}, 1);
  CHECK_FALSE(r2.available());
  CHECK(r2.value == std::numeric_limits<double>::infinity());
  // T collapses to the plain no-op backup.
  const ValueField v{0.3, -0.7};
  const ValueField tv = bellman(none, v);
  for (std::size_t s = 0; s < 2; ++s) CHECK(tv[s] == noop_value(none, v, s));
}

TEST_CASE("masked actions are skipped by the operators") {
  ImpulseGame g = random_game(2, 2, 2, 5);
  g.set_allowed1(0, 1, false);
  g.set_allowed1(0, 2, false);
  CHECK_FALSE(m1(g, {0.0, 0.0}, 0).available());
  CHECK(m1(g, {0.0, 0.0}, 1).available());
}

TEST_CASE("bellman on G1") {
  CHECK(bellman(g1(), {0.0})[0] == doctest::Approx(0.3));
  CHECK(bellman(g1(), {0.6})[0] == doctest::Approx(0.6));
}

TEST_CASE("solve closed-form micro games") {
  const SolveOptions opts{.tol = 1e-9};
  const SolveReport r1 = solve(g1(), opts);
  CHECK(r1.converged);
  CHECK(std::abs(r1.value[0] - 0.6) <= 1e-9);
  CHECK(r1.residual <= 1e-9 * 0.5 / 0.5);
  CHECK(r1.policy.p2_acts[0]);
  CHECK(r1.policy.p2_action[0] == 1);
  CHECK(r1.policy.executed(0) == JointAction{0, 1});
  CHECK(r1.q(0, 0, 0) == doctest::Approx(1.3));
  CHECK(r1.q(0, 1, 0) == doctest::Approx(2.3));

  const SolveReport r2 = solve(g2(), opts);
  CHECK(std::abs(r2.value[0] - 3.0) <= 1e-9);
  CHECK(r2.policy.p1_acts[0]);
  CHECK_FALSE(r2.policy.p2_acts[0]);
  CHECK(r2.policy.executed(0) == JointAction{1, 0});

  const SolveReport r3 = solve(g3(), opts);
  CHECK(std::abs(r3.value[0] - 2.0) <= 1e-9);
  CHECK_FALSE(r3.policy.p1_acts[0]);
  CHECK_FALSE(r3.policy.p2_acts[0]);
}

TEST_CASE("extract_policy conditions on the micro games") {
  // G1 at 0.6: inner max 1.8, m2 0.6 -> Player 2 acts, Player 1's raw trigger
  // is blocked by precedence.
  const ImpulseGame a = g1();
  auto pol = extract_policy(a, {0.6}, lookahead_q(a, {0.6}));
  CHECK(pol.p2_acts[0]);
  CHECK(pol.p1_acts[0]);
  CHECK(pol.region1().empty());
  CHECK(pol.region2() == std::vector<std::size_t>{0});

  const ImpulseGame b = g2();
  pol = extract_policy(b, {3.0}, lookahead_q(b, {3.0}));
  CHECK(pol.p1_acts[0]);
  CHECK(pol.region1() == std::vector<std::size_t>{0});

  const ImpulseGame c = g3();
  pol = extract_policy(c, {2.0}, lookahead_q(c, {2.0}));
  CHECK_FALSE(pol.p1_acts[0]);
  CHECK_FALSE(pol.p2_acts[0]);
}

TEST_CASE("ties resolve to no action") {
  // R(a1,0) - c = R(0,0) exactly: acting is no better than idling.
  ImpulseGame g = g3();
  g.reward(0, 1, 0) = 3.0;  // 3 - 2 = 1 = R(0,0)
  const SolveReport rep = solve(g, {.tol = 1e-12});
  CHECK(rep.value[0] == doctest::Approx(2.0));
  CHECK_FALSE(rep.policy.p1_acts[0]);
}

TEST_CASE("gamma = 0 gives the one-shot game in one sweep") {
  ImpulseGame g = g1();
  g.set_gamma(0.0);
  const SolveReport rep = solve(g);
  CHECK(rep.sweeps == 1);
  CHECK(rep.value[0] == doctest::Approx(0.3));
  CHECK(rep.error_bound == 0.0);
}

TEST_CASE("max_sweeps exhaustion is reported") {
  const ImpulseGame g = random_game(4, 2, 2, 1);
  const SolveReport rep = solve(g, {.tol = 1e-12, .max_sweeps = 5});
  CHECK_FALSE(rep.converged);
  CHECK(rep.sweeps == 5);
  CHECK(rep.residual > 0.0);
}

TEST_CASE("solve error bound holds against a tightly solved reference") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImpulseGame g = random_game(6, 2, 2, seed);
    const SolveReport loose = solve(g, {.tol = 1e-4});
    const SolveReport tight = solve(g, {.tol = 1e-13});
    CHECK(sup_distance(loose.value, tight.value) <= 1e-4);
    CHECK(sup_distance(loose.value, tight.value) <= loose.error_bound + 1e-13);
  }
}

TEST_CASE("evaluate_policies") {
  CHECK(evaluate_policies(g2(), {1}, {0})[0] == doctest::Approx(3.0));
  CHECK(evaluate_policies(g1(), {0}, {1})[0] == doctest::Approx(0.6));
  // Player 2 precedence: Player 1's action is suppressed.
  CHECK(evaluate_policies(g1(), {1}, {1})[0] == doctest::Approx(0.6));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ImpulseGame g = random_game(5, 1, 1, seed);
    const ValueField exact = evaluate_policies(g, std::vector<int>(5, 0),
                                               std::vector<int>(5, 0));
    CHECK(sup_distance(exact, neumann_value(g)) <= 1e-10);
  }
}

TEST_CASE("minimax oracle certifies the micro games") {
  auto res = minimax_oracle(g1(), 1000);
  REQUIRE(res);
  CHECK(res->certified);
  CHECK(res->upper[0] == doctest::Approx(0.6));
  CHECK(res->lower[0] == doctest::Approx(0.6));

  res = minimax_oracle(g3(), 1000);
  REQUIRE(res);
  CHECK(res->certified);
  CHECK(res->upper[0] == doctest::Approx(2.0));

  res = minimax_oracle(random_game(3, 1, 1, 11), 1000);
  REQUIRE(res);
  CHECK(res->certified);

  CHECK(policy_pair_count(random_game(3, 1, 1, 11)) == 64);
  CHECK_FALSE(minimax_oracle(random_game(3, 1, 1, 11), 63));
}

TEST_CASE("intervention times") {
  const SolveReport r2 = solve(g2());
  auto times = intervention_times(r2.policy, {0, 0, 0});
  CHECK(times.taus == std::vector<std::size_t>{0, 1, 2});
  CHECK(times.rhos.empty());

  times = intervention_times(solve(g3()).policy, {0, 0});
  CHECK(times.taus.empty());
  CHECK(times.rhos.empty());

  times = intervention_times(solve(g1()).policy, {0});
  CHECK(times.taus.empty());
  CHECK(times.rhos == std::vector<std::size_t>{0});
}

TEST_CASE("property: T is a gamma-contraction in the sup norm") {
  Rng rng(2024);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ImpulseGame g = random_game(1 + seed % 7, 1 + seed % 3, 1 + (seed / 3) % 3,
                                      seed, {.gamma = seed % 2 ? 0.9 : 0.5});
    for (int k = 0; k < 10; ++k) {
      const ValueField v = random_field(rng, g.num_states(), -10, 10);
      const ValueField w = random_field(rng, g.num_states(), -10, 10);
      CHECK(sup_distance(bellman(g, v), bellman(g, w)) <=
            g.gamma() * sup_distance(v, w) + 1e-12);
    }
  }
}

TEST_CASE("property: T is monotone") {
  Rng rng(7);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ImpulseGame g = random_game(5, 2, 2, seed);
    ValueField v = random_field(rng, 5, -10, 10);
    ValueField w = v;
    for (double& x : w) x += rng.uniform(0.0, 3.0);
    const ValueField tv = bellman(g, v);
    const ValueField tw = bellman(g, w);
    for (std::size_t s = 0; s < 5; ++s) CHECK(tv[s] <= tw[s] + 1e-15);
  }
}

TEST_CASE("property: fixed point does not depend on the start") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImpulseGame g = random_game(6, 2, 2, seed);
    const double tol = 1e-9;
    const SolveReport a = solve(g, {.tol = tol});
    const SolveReport b =
        solve(g, {.tol = tol, .initial = ValueField(6, 100.0)});
    CHECK(sup_distance(a.value, b.value) <= 2 * tol);
  }
}

TEST_CASE("property: equilibrium policies are a saddle point") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImpulseGame g = random_game(3, 1, 1, 100 + seed);
    const SolveReport rep = solve(g, {.tol = 1e-12});
    const auto pol1 = rep.policy.player1_map();
    const auto pol2 = rep.policy.player2_map();
    const ValueField at_eq = evaluate_policies(g, pol1, pol2);
    CHECK(sup_distance(at_eq, rep.value) <= 1e-8);
    for (std::uint64_t i = 0; i < 8; ++i) {
      std::vector<int> dev{int(i & 1), int((i >> 1) & 1), int((i >> 2) & 1)};
      const ValueField v1 = evaluate_policies(g, dev, pol2);
      const ValueField v2 = evaluate_policies(g, pol1, dev);
      for (std::size_t s = 0; s < 3; ++s) {
        CHECK(v1[s] <= rep.value[s] + 1e-8);
        CHECK(v2[s] >= rep.value[s] - 1e-8);
      }
    }
  }
}

TEST_CASE("property: raising costs weakly worsens the acting player's operator") {
  Rng rng(99);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ImpulseGame g = random_game(4, 2, 2, seed);
    const ValueField v = random_field(rng, 4, -5, 5);
    ImpulseGame dearer = g;
    for (std::size_t s = 0; s < 4; ++s)
      for (int x = 1; x <= 2; ++x) {
        dearer.cost1(s, x) += rng.uniform(0.0, 1.0);
        dearer.cost2(s, x) += rng.uniform(0.0, 1.0);
      }
    for (std::size_t s = 0; s < 4; ++s) {
      CHECK(m1(dearer, v, s).value <= m1(g, v, s).value);
      CHECK(m2(dearer, v, s).value >= m2(g, v, s).value);
    }
  }
}

TEST_CASE("empirical: intervention regions under a global cost scale") {
  // Not an invariant; recorded for inspection only.
  std::size_t increases = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImpulseGame base = random_game(8, 2, 2, seed);
    std::size_t previous = base.num_states() * 2 + 1;
    for (double scale : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      ImpulseGame g = base;
      for (std::size_t s = 0; s < 8; ++s)
        for (int x = 1; x <= 2; ++x) {
          g.cost1(s, x) *= scale;
          g.cost2(s, x) *= scale;
        }
      const auto pol = solve(g).policy;
      const std::size_t size = pol.region1().size() + pol.region2().size();
      if (size > previous) ++increases;
      previous = size;
    }
  }
  MESSAGE("region-size increases under cost scaling: " << increases);
}

TEST_CASE("removing Player 2 reduces T to single-agent impulse control") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImpulseGame g = drop_player2(random_game(5, 2, 2, seed));
    const SolveReport rep = solve(g, {.tol = 1e-12});
    CHECK(sup_distance(rep.value, single_agent_value(g, 400)) <= 1e-10);
  }
}

TEST_CASE("report serialises every field") {
  const auto doc = report_to_json(solve(g1()));
  CHECK(doc["value"][0].get<double>() == doctest::Approx(0.6));
  CHECK(doc["q"][0][1][0].get<double>() == doctest::Approx(2.3));
  CHECK(doc["policy"][0]["p2_acts"].get<bool>());
  CHECK(doc.contains("sweeps"));
  CHECK(doc.contains("residual"));
  CHECK(doc.contains("error_bound"));
}
