#include "impulse/budget.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "impulse/random.hpp"

namespace impulse {

std::vector<std::string> AugmentedGame::labels() const {
  std::vector<std::string> out;
  out.reserve(num_states());
  for (std::size_t x = 0; x < num_states(); ++x) {
    const State st = decode(x);
    out.push_back("(" + std::to_string(st.s) + "," + std::to_string(st.y) + "," +
                  std::to_string(st.z) + ")");
  }
  return out;
}

AugmentedGame augment(const ImpulseGame& base, std::size_t n1, std::size_t n2) {
  AugmentedGame aug;
  aug.base = base;
  aug.n1 = n1;
  aug.n2 = n2;
  const std::size_t ns = base.num_states();
  const int na = static_cast<int>(base.num_actions1());
  const int nb = static_cast<int>(base.num_actions2());
  aug.game = ImpulseGame(ns * (n1 + 1) * (n2 + 1), base.num_actions1(),
                         base.num_actions2(), base.gamma(), base.cost_floor());
  ImpulseGame& g = aug.game;

  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t y = 0; y <= n1; ++y) {
      for (std::size_t z = 0; z <= n2; ++z) {
        const std::size_t x = aug.index(s, y, z);
        for (int a = 0; a < na; ++a) {
          for (int b = 0; b < nb; ++b) {
            g.reward(x, a, b) = base.reward(s, a, b);
            // Masked cells keep a valid row; they are never executed.
            const std::size_t y2 = (a != kNull && y > 0) ? y - 1 : y;
            const std::size_t z2 = (b != kNull && z > 0) ? z - 1 : z;
            auto row = g.kernel(x, a, b);
            std::fill(row.begin(), row.end(), 0.0);
            const auto src = base.kernel(s, a, b);
            for (std::size_t t = 0; t < ns; ++t) row[aug.index(t, y2, z2)] = src[t];
          }
        }
        for (int a = 1; a < na; ++a) {
          g.cost1(x, a) = base.cost1(s, a);
          if (y == 0 || !base.allowed1(s, a)) g.set_allowed1(x, a, false);
        }
        for (int b = 1; b < nb; ++b) {
          g.cost2(x, b) = base.cost2(s, b);
          if (z == 0 || !base.allowed2(s, b)) g.set_allowed2(x, b, false);
        }
      }
    }
  }
  return aug;
}

SolveReport solve_budgeted(const AugmentedGame& augmented,
                           const SolveOptions& options) {
  return solve(augmented.game, options);
}

BudgetTrajectory simulate_budgeted(const AugmentedGame& augmented,
                                   const EquilibriumPolicy& policy,
                                   std::size_t steps, std::uint64_t seed,
                                   std::size_t s0) {
  if (policy.num_states() != augmented.num_states())
    throw std::invalid_argument("simulate_budgeted: policy size mismatch");
  if (s0 >= augmented.base.num_states())
    throw std::out_of_range("simulate_budgeted: start state out of range");
  const ImpulseGame& g = augmented.game;
  Rng rng(seed);
  BudgetTrajectory out;
  std::size_t x = augmented.index(s0, augmented.n1, augmented.n2);
  double discount = 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const JointAction e = policy.executed(x);
    if (!g.allowed1(x, e.a) || !g.allowed2(x, e.b))
      throw std::logic_error("simulate_budgeted: policy chose a masked action");
    if (e.a != kNull) {
      ++out.interventions1;
      out.taus.push_back(t);
    }
    if (e.b != kNull) {
      ++out.interventions2;
      out.rhos.push_back(t);
    }
    if (out.interventions1 > augmented.n1 || out.interventions2 > augmented.n2)
      throw std::logic_error("simulate_budgeted: budget exceeded");
    const double r = effective_reward(g, x, e);
    total += discount * r;
    discount *= g.gamma();
    out.steps.push_back({t, x, augmented.decode(x), e, r, total});
    x = rng.categorical(g.kernel(x, e.a, e.b));
  }
  return out;
}

}  // namespace impulse
