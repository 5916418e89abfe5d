#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impulse/game.hpp"
#include "impulse/solver.hpp"

namespace impulse {

/// Remaining-intervention counters folded into the state: x = (s, y, z) with
/// y in [0, n1] and z in [0, n2]. A non-null action by Player 1 decrements y,
/// by Player 2 decrements z. Exhausted budgets mask the actions out.
struct AugmentedGame {
  ImpulseGame base;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  ImpulseGame game;  // over the augmented states

  struct State {
    std::size_t s = 0;
    std::size_t y = 0;
    std::size_t z = 0;
  };

  std::size_t index(std::size_t s, std::size_t y, std::size_t z) const {
    return (s * (n1 + 1) + y) * (n2 + 1) + z;
  }
  State decode(std::size_t x) const {
    return {x / ((n1 + 1) * (n2 + 1)), (x / (n2 + 1)) % (n1 + 1), x % (n2 + 1)};
  }
  std::size_t num_states() const { return game.num_states(); }
  /// "(s,y,z)" for every augmented state.
  std::vector<std::string> labels() const;
};

AugmentedGame augment(const ImpulseGame& base, std::size_t n1, std::size_t n2);

/// Exact solve on the augmented game.
SolveReport solve_budgeted(const AugmentedGame& augmented,
                           const SolveOptions& options = {});

struct BudgetStep {
  std::size_t t = 0;
  std::size_t x = 0;
  AugmentedGame::State state;
  JointAction executed;
  double reward = 0.0;             // Player 1 net payoff
  double cumulative_return = 0.0;  // discounted, through this step
};

struct BudgetTrajectory {
  std::vector<BudgetStep> steps;
  std::size_t interventions1 = 0;
  std::size_t interventions2 = 0;
  std::vector<std::size_t> taus;
  std::vector<std::size_t> rhos;
};

/// Plays `policy` from (s0, n1, n2). Throws std::logic_error if the policy
/// tries a masked action or a budget is exceeded.
BudgetTrajectory simulate_budgeted(const AugmentedGame& augmented,
                                   const EquilibriumPolicy& policy,
                                   std::size_t steps, std::uint64_t seed,
                                   std::size_t s0 = 0);

}  // namespace impulse
