#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "impulse/linfa.hpp"
#include "impulse/random.hpp"

using namespace impulse;
using impulse::testing::g1;
using impulse::testing::g2;
using impulse::testing::g3;

namespace {

FeatureBasis random_rank2(std::size_t n, std::uint64_t seed) {
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(n), 2);
  Rng rng(seed);
  for (Eigen::Index s = 0; s < phi.rows(); ++s) {
    phi(s, 0) = 1.0;
    phi(s, 1) = rng.uniform(-1.0, 1.0);
  }
  return FeatureBasis(phi);
}

std::vector<double> random_weights(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) total += (x = rng.uniform(0.05, 1.0));
  for (double& x : w) x /= total;
  return w;
}

ValueField random_field(std::size_t n, Rng& rng, double scale = 5.0) {
  ValueField v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

ValueField minus(const ValueField& a, const ValueField& b) {
  ValueField out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace

TEST_CASE("basis rank check") {
  Eigen::MatrixXd dup(3, 2);
  dup << 1, 2, 1, 2, 1, 2;
  CHECK_THROWS_AS(FeatureBasis{dup}, std::invalid_argument);
  CHECK_THROWS_AS(FeatureBasis(BasisMatrix{{1.0, 0.0}, {2.0}}), std::invalid_argument);
  CHECK(FeatureBasis(BasisMatrix{{1.0, 0.0}, {1.0, 1.0}}).dim() == 2);
}

TEST_CASE("project examples") {
  const FeatureBasis id = FeatureBasis::identity(3);
  const ValueField x{1.0, -2.0, 0.5};
  const ValueField px = project(id, {0.2, 0.3, 0.5}, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(px[i] == doctest::Approx(x[i]).epsilon(1e-12));

  const ValueField halves = project(FeatureBasis::constant(2), {0.5, 0.5}, {0.0, 2.0});
  CHECK(halves[0] == doctest::Approx(1.0));
  CHECK(halves[1] == doctest::Approx(1.0));

  const FeatureBasis b = random_rank2(4, 3);
  Eigen::VectorXd r(2);
  r << 0.7, -1.3;
  const ValueField in_span = b.evaluate(r);
  const ValueField back = project(b, {0.1, 0.2, 0.3, 0.4}, in_span);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(back[i] - in_span[i]) <= 1e-10);

  CHECK_THROWS_AS(project(b, {0.0, 0.2, 0.3, 0.5}, in_span), std::invalid_argument);
}

TEST_CASE("property: projection is idempotent and non-expansive") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(6);
    const FeatureBasis b = random_rank2(n, 100 + trial);
    const auto w = random_weights(n, rng);
    const ValueField x = random_field(n, rng);
    const ValueField y = random_field(n, rng);
    const ValueField px = project(b, w, x);
    const ValueField ppx = project(b, w, px);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ppx[i] - px[i]) <= 1e-10);
    const ValueField py = project(b, w, y);
    CHECK(weighted_norm(w, minus(px, py)) <= weighted_norm(w, minus(x, y)) + 1e-12);
  }
}

TEST_CASE("f_operator examples") {
  // No actions: both combinators reduce to R(.,0,0) + gamma P v.
  const ImpulseGame passive = random_game(3, 0, 0, 5);
  const FeatureBasis id = FeatureBasis::identity(3);
  Eigen::VectorXd r(3);
  r << 1.0, -2.0, 0.5;
  const ValueField tf = f_operator(passive, id, r, Combinator::F);
  const ValueField tt = f_operator(passive, id, r, Combinator::T);
  for (std::size_t s = 0; s < 3; ++s) {
    double expect = passive.reward(s, 0, 0);
    for (std::size_t t = 0; t < 3; ++t)
      expect += passive.gamma() * passive.kernel(s, 0, 0)[t] * r[static_cast<Eigen::Index>(t)];
    CHECK(tf[s] == doctest::Approx(expect).epsilon(1e-14));
    CHECK(tt[s] == doctest::Approx(expect).epsilon(1e-14));
  }

  Eigen::VectorXd fixed(1);
  fixed << 0.6;
  CHECK(f_operator(g1(), FeatureBasis::identity(1), fixed, Combinator::T)[0] ==
        doctest::Approx(0.6).epsilon(1e-14));
  // On G1 at v = 0.6: m1 = 1.8, noop = 1.3, m2 = 0.6.
  CHECK(f_operator(g1(), FeatureBasis::identity(1), fixed, Combinator::F)[0] ==
        doctest::Approx(1.3).epsilon(1e-14));
  CHECK(parse_combinator("F") == Combinator::F);
  CHECK_THROWS_AS(parse_combinator("G"), std::invalid_argument);
}

TEST_CASE("property: both combinators are sup-norm contractions") {
  Rng rng(7);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 2 + seed % 6;
    const ImpulseGame g = random_game(n, 1 + seed % 3, 1 + (seed / 3) % 3, seed);
    const FeatureBasis b = random_rank2(n, seed);
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd r = Eigen::VectorXd::NullaryExpr(2, [&] { return rng.uniform(-5, 5); });
      Eigen::VectorXd q = Eigen::VectorXd::NullaryExpr(2, [&] { return rng.uniform(-5, 5); });
      const double in = sup_distance(b.evaluate(r), b.evaluate(q));
      for (Combinator c : {Combinator::F, Combinator::T}) {
        const double out = sup_distance(f_operator(g, b, r, c), f_operator(g, b, q, c));
        CHECK(out <= g.gamma() * in + 1e-12);
      }
    }
  }
}

TEST_CASE("property: projected iteration contracts geometrically") {
  // Measured in the weighted norm under the equilibrium chain's stationary law.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImpulseGame g = random_game(4, 2, 2, 500 + seed);
    const FeatureBasis b = random_rank2(4, seed);
    const SolveReport exact = solve(g, {.tol = 1e-12});
    const auto w = stationary_distribution(g, exact.policy).distribution;
    const auto iters = projected_iteration(g, b, w, Eigen::VectorXd::Zero(2),
                                           Combinator::T, 40);
    double worst = 0.0;
    for (std::size_t k = 2; k < iters.size(); ++k) {
      const double prev = weighted_norm(w, minus(b.evaluate(iters[k - 1]), b.evaluate(iters[k - 2])));
      const double next = weighted_norm(w, minus(b.evaluate(iters[k]), b.evaluate(iters[k - 1])));
      if (prev > 1e-9) worst = std::max(worst, next / prev);
    }
    CHECK(worst <= g.gamma() + 0.05);
  }
}

TEST_CASE("fit with the identity basis reproduces the exact value") {
  for (const ImpulseGame& g : {g1(), g2(), g3()}) {
    const SolveReport exact = solve(g, {.tol = 1e-12});
    FitConfig cfg;
    cfg.samples = 100000;
    const FitReport rep = fit(g, FeatureBasis::identity(1), cfg, exact.value);
    REQUIRE(rep.distance_to_solution.has_value());
    CHECK(*rep.distance_to_solution <= 1e-3);
  }
}

TEST_CASE("fit with a constant basis finds the weighted 1-D fixed point") {
  // Oracle: bisection on r = mean_s T(r 1)(s), which is monotone with slope <= gamma.
  const ImpulseGame g = random_game(2, 1, 1, 31);
  const FeatureBasis one = FeatureBasis::constant(2);
  const auto fixed_point = [&](const std::vector<double>& w) {
    const auto residual = [&](double r) {
      const ValueField t = apply_combinator(g, {r, r}, Combinator::T);
      return w[0] * t[0] + w[1] * t[1] - r;
    };
    double lo = -50.0, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  FitConfig cfg;
  cfg.samples = 400000;
  cfg.sampling = Sampling::Uniform;
  cfg.omega = 0.6;
  cfg.seed = 4;
  const FitReport rep = fit(g, one, cfg);
  CHECK(std::abs(rep.weights[0] - fixed_point({0.5, 0.5})) <= 2e-2);

  // The bound is stated for the projection weighted by the equilibrium chain.
  const auto mu = stationary_distribution(g, solve(g).policy).distribution;
  const BoundCheck at_mu =
      verify_bound(g, one, Eigen::VectorXd::Constant(1, fixed_point(mu)));
  CHECK(at_mu.ergodic);
  CHECK(at_mu.holds);
}

TEST_CASE("fit: zero samples keeps the initial weights, divergence is reported") {
  const ImpulseGame g = random_game(3, 1, 1, 2);
  const FeatureBasis b = random_rank2(3, 1);
  FitConfig cfg;
  cfg.samples = 0;
  Eigen::VectorXd r0(2);
  r0 << 0.3, -0.2;
  CHECK(fit(g, b, cfg, std::nullopt, r0).weights == r0);

  cfg.samples = 1000;
  cfg.divergence_limit = 1e-3;
  CHECK_THROWS_AS(fit(g, b, cfg), FitDivergence);
}

TEST_CASE("verify_bound examples") {
  const BoundCheck exact = verify_bound(g1(), FeatureBasis::identity(1),
                                        Eigen::VectorXd::Constant(1, 0.6));
  CHECK(exact.lhs <= 1e-9);
  CHECK(exact.rhs <= 1e-12);
  CHECK(exact.holds);
  CHECK(exact.multiplier == doctest::Approx(1.1547005383792515));

  // A chain that stays put: the equilibrium chain has two absorbing states.
  ImpulseGame stuck(2, 1, 1, 0.9, 0.1);
  stuck.reward(0, 0, 0) = 1.0;
  const BoundCheck fallback = verify_bound(stuck, FeatureBasis::identity(2),
                                           Eigen::Vector2d(10.0, 0.0));
  CHECK_FALSE(fallback.ergodic);
  CHECK(fallback.weights == std::vector<double>{0.5, 0.5});
}

TEST_CASE("stationary distribution of a two-state swap chain") {
  ImpulseGame g(2, 1, 1, 0.9, 0.1);
  g.kernel(0, 0, 0)[0] = 0.0;
  g.kernel(0, 0, 0)[1] = 1.0;
  g.kernel(1, 0, 0)[0] = 0.25;
  g.kernel(1, 0, 0)[1] = 0.75;
  const SolveReport rep = solve(g);
  const auto st = stationary_distribution(g, rep.policy);
  CHECK(st.ergodic);
  CHECK(st.distribution[0] == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(st.distribution[1] == doctest::Approx(0.8).epsilon(1e-10));
}
